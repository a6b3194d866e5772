"""Binary test pairs ``(x1, y1, x2, y2)`` for the 256-bit descriptor.

Generated once with ``numpy.random.default_rng(0x9E3779B9)``: offsets drawn
from N(0, (31/5)^2), rounded, clipped to [-13, 13], identical pairs redrawn.
Kept literal so descriptors never depend on the RNG implementation.
"""

PATTERN = (
    (-4, 4, 8, 6), (-6, -11, -9, 4), (-1, 7, 0, -2), (3, -7, 8, 8),
    (-2, -8, -2, 4), (-5, -9, 6, 6), (0, -5, 11, 8), (-7, -8, -5, 9),
    (-2, 6, -4, 5), (4, 10, 7, 3), (-1, 13, -4, 0), (-3, -10, -1, 0),
    (7, -4, -2, -7), (4, -11, 3, -2), (4, 1, -4, -1), (7, 2, -4, -3),
    (-8, -1, 13, -4), (3, 2, 6, -7), (-4, -1, -2, -3), (-8, -1, -1, 8),
    (-2, -1, -1, -5), (-8, -4, -1, 4), (4, -9, 3, -5), (7, 2, 7, -1),
    (5, -4, -6, -5), (4, -7, 3, -7), (2, 0, -7, 1), (-5, -2, -3, -2),
    (-5, 3, -2, 0), (1, 3, 0, 4), (0, 8, 1, 3), (2, -1, -1, 6),
    (4, -9, 4, -5), (0, 1, -8, 13), (6, -9, -6, -5), (8, 5, -4, -3),
    (2, -13, -2, 2), (-2, 1, -2, -9), (6, 3, 0, 7), (1, -5, -10, 5),
    (-3, 6, 2, -1), (-9, -5, 6, 1), (3, -1, -3, -1), (-1, -5, -12, -6),
    (3, -1, -8, -6), (4, -13, -1, 8), (0, 5, -4, -4), (-1, 3, -7, 2),
    (6, -3, 8, -6), (0, -3, -10, -8), (-3, 4, 0, 1), (-8, 0, 6, -13),
    (11, 0, -9, 0), (11, -3, 8, -4), (1, -7, 8, -3), (-6, -3, 7, 7),
    (-8, -1, 0, 7), (11, -2, 7, -6), (6, -8, -4, 12), (2, 5, 7, -6),
    (-7, -5, -1, -3), (-4, -13, -5, 3), (6, 7, -10, 1), (13, 2, 4, 5),
    (3, -4, -13, 11), (-3, -7, -3, -2), (-3, 10, -5, 5), (4, -4, -13, 6),
    (5, -8, -8, 2), (0, 13, -5, -8), (2, 5, 7, 4), (5, 13, 4, -7),
    (-5, -3, 3, -7), (-1, 9, 9, -10), (6, 0, -2, -5), (13, 4, 1, -2),
    (-8, -3, -5, 2), (0, -1, 9, 5), (-13, 2, 7, 1), (5, 3, 11, -3),
    (-4, 11, -13, 2), (-1, -8, -3, 3), (-5, 7, 4, -1), (6, 13, 6, -9),
    (-3, -8, -12, -4), (-11, 7, -3, -10), (-7, 1, -5, 2), (12, -2, -7, 2),
    (0, 4, 0, -2), (7, -10, 4, -12), (-10, 9, 0, 7), (-5, -13, -8, -9),
    (-3, 1, -4, -1), (0, -6, -4, 0), (3, -6, -2, 6), (1, 1, 5, -8),
    (-1, 8, 7, -1), (3, -6, -2, 13), (2, -12, -3, 0), (-9, 1, 3, -12),
    (4, 13, -4, -8), (-2, -4, -1, 6), (-6, -5, -3, 13), (4, 2, -7, -2),
    (4, 1, 8, -1), (1, -13, 2, -3), (3, 5, 1, -1), (-5, -1, 0, 2),
    (-3, -6, -3, 6), (-6, 4, 6, -11), (5, 7, -10, 2), (-2, 6, 0, 8),
    (-2, 11, -13, -5), (-7, -4, -13, -1), (12, -1, -11, -3), (-9, -3, 1, -13),
    (1, -11, 0, -13), (-4, -13, 9, -2), (-8, 10, 1, 1), (-9, 4, 5, -4),
    (-6, 13, -11, 9), (12, 3, 8, -5), (11, 9, 4, -6), (-7, 11, -1, 4),
    (-2, 1, 11, -1), (-1, -13, 4, 3), (3, 6, -13, 2), (9, -7, 8, -13),
    (13, -13, 6, -6), (7, 3, -6, -4), (-13, 3, -4, -1), (-5, -2, -8, 2),
    (-3, -5, 2, -2), (-2, -1, -8, -1), (-1, -2, 3, 5), (6, 0, -6, 3),
    (1, -8, 11, 6), (0, 4, 4, 0), (1, -6, 7, 0), (-2, 0, -1, -1),
    (-1, -5, 0, -3), (2, -4, -13, 0), (9, -3, -2, -2), (6, 1, 8, -6),
    (-4, 12, 8, -10), (4, 3, -5, 9), (0, 4, 0, -4), (-6, -7, -6, 11),
    (-1, -4, -2, 1), (-4, -3, -9, 4), (-1, 1, -3, -3), (0, 3, -4, 12),
    (4, 1, -2, -6), (11, -7, 7, 9), (2, 7, 7, 1), (-5, -2, -7, 0),
    (4, -6, -6, -3), (-3, -6, 9, 4), (-3, -10, 8, -2), (3, 6, -1, -4),
    (-4, -2, -5, 6), (3, -1, 6, 5), (3, 7, 1, 3), (-4, -5, 0, -5),
    (-1, -12, 0, -1), (3, -4, 1, 3), (2, -6, -5, -1), (-13, -4, 4, 10),
    (2, 2, 5, 1), (2, -9, -7, 8), (13, 1, -8, -5), (2, -1, 1, 8),
    (-7, -9, 1, -3), (-8, 6, 4, -1), (3, 2, 2, 7), (-8, -7, 2, 12),
    (-3, -13, 2, 8), (-1, 4, 1, -2), (9, 1, 5, 11), (0, -7, -4, 0),
    (1, 2, 1, 3), (-1, 8, -2, 3), (2, 2, -13, -7), (1, 8, -2, 13),
    (9, -8, -6, -13), (5, 0, -5, 0), (8, -7, -3, 4), (4, -5, -5, 6),
    (0, 2, 2, 0), (-3, -2, -4, 9), (7, -1, 5, 4), (2, -4, -8, 0),
    (-6, -1, 0, 1), (0, -8, 9, -10), (8, 10, 7, -7), (1, 5, 7, 1),
    (13, 7, -3, -13), (-3, -8, -13, -4), (5, -2, -5, 1), (5, 0, 1, 2),
    (4, 0, 0, -1), (-1, 0, -1, 11), (7, 6, 12, -5), (8, -2, -3, -2),
    (-7, 9, -4, -7), (-1, 8, -5, -3), (0, 2, -12, -10), (-1, 6, -11, -2),
    (-1, -5, -4, 7), (4, 3, -3, -5), (1, 3, -9, 1), (4, 4, 8, 3),
    (-1, 0, 8, 1), (-7, -2, -4, 1), (3, -1, 1, 5), (-11, -1, 6, -4),
    (3, -2, 2, 3), (6, -1, -13, -1), (2, -3, 4, -8), (6, -6, 3, 0),
    (-3, 11, 3, 6), (-5, -4, 2, -13), (4, 1, -8, -3), (-5, -6, -3, -4),
    (-5, 0, -3, 0), (0, -10, -4, -10), (10, 4, -13, 0), (1, -7, -5, -4),
    (4, 4, -2, 4), (9, -4, -5, 0), (8, 11, -9, 4), (-2, 0, 4, -3),
    (-6, -3, 10, -13), (-10, -7, -5, -4), (0, 13, -2, 5), (-3, 7, 1, -4),
    (0, -7, -3, 4), (13, 2, 0, -6), (13, -1, 3, -2), (-1, 8, -4, -3),
    (0, -8, 9, -1), (-4, 8, -7, -1), (3, -3, -5, 2), (8, -7, 4, 0),
    (12, -4, 0, 7), (-5, 7, -3, -1), (5, -1, 6, -4), (-6, -6, 5, 8),
    (-1, 13, -13, -7), (0, -13, 5, -5), (3, 4, -5, -4), (7, 2, 0, -6),
    (2, 11, 11, -5), (-4, -1, -1, 3), (8, 9, -1, 1), (-2, 7, -2, 0),
)
