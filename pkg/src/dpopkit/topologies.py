"""Bus adjacency for the distribution feeders used by the grid generator.

Only connectivity is recorded (no impedances or ratings).  The lists follow
the published IEEE test feeder line tables with regulators, transformers and
closed switches collapsed into plain edges; normally-open ties are dropped,
so every feeder is radial.  Treat them as approximations of the real feeders.
"""

from __future__ import annotations

from .errors import UnknownTopology

BUS13 = [
    (650, 632), (632, 633), (633, 634), (632, 645), (645, 646), (632, 671),
    (671, 692), (692, 675), (671, 684), (684, 611), (684, 652), (671, 680),
]

BUS34 = [
    (800, 802), (802, 806), (806, 808), (808, 810), (808, 812), (812, 814),
    (814, 850), (850, 816), (816, 818), (818, 820), (820, 822), (816, 824),
    (824, 826), (824, 828), (828, 830), (830, 854), (854, 856), (854, 852),
    (852, 832), (832, 888), (888, 890), (832, 858), (858, 864), (858, 834),
    (834, 842), (842, 844), (844, 846), (846, 848), (834, 860), (860, 836),
    (836, 840), (836, 862), (862, 838),
]

BUS37 = [
    (799, 701), (701, 702), (702, 705), (702, 713), (702, 703), (703, 727),
    (703, 730), (704, 714), (704, 720), (705, 742), (705, 712), (706, 725),
    (707, 724), (707, 722), (708, 733), (708, 732), (709, 731), (709, 708),
    (710, 735), (710, 736), (711, 741), (711, 740), (713, 704), (714, 718),
    (720, 707), (720, 706), (727, 744), (730, 709), (733, 734), (734, 737),
    (734, 710), (737, 738), (738, 711), (744, 728), (744, 729), (709, 775),
]

BUS123 = [
    (150, 149), (149, 1), (1, 2), (1, 3), (1, 7), (3, 4), (3, 5), (5, 6),
    (7, 8), (8, 12), (8, 9), (8, 13), (9, 14), (13, 34), (13, 18), (13, 152),
    (152, 52), (14, 11), (14, 10), (34, 15), (15, 16), (15, 17), (18, 19),
    (18, 21), (18, 135), (135, 35), (19, 20), (21, 22), (21, 23), (23, 24),
    (23, 25), (25, 26), (25, 28), (26, 27), (26, 31), (27, 33), (28, 29),
    (29, 30), (30, 250), (31, 32), (35, 36), (35, 40), (36, 37), (36, 38),
    (38, 39), (40, 41), (40, 42), (42, 43), (42, 44), (44, 45), (44, 47),
    (45, 46), (47, 48), (47, 49), (49, 50), (50, 51), (51, 151), (52, 53),
    (53, 54), (54, 55), (54, 57), (55, 56), (57, 58), (57, 60), (58, 59),
    (60, 61), (60, 62), (60, 160), (160, 67), (61, 610), (62, 63), (63, 64),
    (64, 65), (65, 66), (67, 68), (67, 72), (67, 97), (68, 69), (69, 70),
    (70, 71), (72, 73), (72, 76), (73, 74), (74, 75), (76, 77), (76, 86),
    (77, 78), (78, 79), (78, 80), (80, 81), (81, 82), (81, 84), (82, 83),
    (84, 85), (86, 87), (87, 88), (87, 89), (89, 90), (89, 91), (91, 92),
    (91, 93), (93, 94), (93, 95), (95, 96), (97, 98), (97, 197), (197, 101),
    (98, 99), (99, 100), (100, 450), (101, 102), (101, 105), (102, 103),
    (103, 104), (105, 106), (105, 108), (106, 107), (108, 109), (108, 300),
    (109, 110), (110, 111), (110, 112), (112, 113), (113, 114),
]

FEEDERS = {"bus13": BUS13, "bus34": BUS34, "bus37": BUS37, "bus123": BUS123}


def ring(n: int) -> list[tuple[int, int]]:
    if n < 3:
        raise UnknownTopology(f"ring topology needs at least 3 nodes, got {n}")
    return [(i, i % n + 1) for i in range(1, n + 1)]


def topology_edges(name: str, nodes: int | None = None) -> list[tuple[int, int]]:
    """Edge list for ``name`` (a feeder key, ``ring`` with ``nodes``, or ``ring(n)``)."""
    if name.startswith("ring(") and name.endswith(")"):
        return ring(int(name[5:-1]))
    if name == "ring":
        if nodes is None:
            raise UnknownTopology("ring topology needs a node count")
        return ring(nodes)
    try:
        return list(FEEDERS[name])
    except KeyError:
        raise UnknownTopology(f"unknown topology {name!r}") from None
