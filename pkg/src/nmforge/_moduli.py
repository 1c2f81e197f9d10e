"""Frozen default moduli: the smallest irreducible polynomial of each degree."""

DEFAULT_MODULI: dict[int, int] = {
    1: 0x3,
    2: 0x7,
    3: 0xb,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11b,
    9: 0x203,
    10: 0x409,
    11: 0x805,
    12: 0x1009,
    13: 0x201b,
    14: 0x4021,
    15: 0x8003,
    16: 0x1002b,
    17: 0x20009,
    18: 0x40009,
    19: 0x80027,
    20: 0x100009,
    21: 0x200005,
    22: 0x400003,
    23: 0x800021,
    24: 0x100001b,
    25: 0x2000009,
    26: 0x400001b,
    27: 0x8000027,
    28: 0x10000003,
    29: 0x20000005,
    30: 0x40000003,
    31: 0x80000009,
    32: 0x10000008d,
    33: 0x20000004b,
    34: 0x40000001b,
    35: 0x800000005,
    36: 0x1000000035,
    37: 0x200000003f,
    38: 0x4000000063,
    39: 0x8000000011,
    40: 0x10000000039,
    41: 0x20000000009,
    42: 0x40000000027,
    43: 0x80000000059,
    44: 0x100000000021,
    45: 0x20000000001b,
    46: 0x400000000003,
    47: 0x800000000021,
    48: 0x100000000002d,
    49: 0x2000000000071,
    50: 0x400000000001d,
    51: 0x800000000004b,
    52: 0x10000000000009,
    53: 0x20000000000047,
    54: 0x4000000000007d,
    55: 0x80000000000047,
    56: 0x100000000000095,
    57: 0x200000000000011,
    58: 0x400000000000063,
    59: 0x80000000000007b,
    60: 0x1000000000000003,
    61: 0x2000000000000027,
    62: 0x4000000000000069,
    63: 0x8000000000000003,
    64: 0x1000000000000001b,
    65: 0x2000000000000001b,
    66: 0x40000000000000009,
    67: 0x80000000000000027,
    68: 0x1000000000000000a3,
    69: 0x200000000000000065,
    70: 0x40000000000000002b,
    71: 0x80000000000000002b,
    72: 0x100000000000000005f,
    73: 0x200000000000000001d,
    74: 0x4000000000000000047,
    75: 0x800000000000000004b,
    76: 0x10000000000000000035,
    77: 0x20000000000000000065,
    78: 0x4000000000000000005f,
    79: 0x8000000000000000001d,
    80: 0x1000000000000000000af,
    81: 0x200000000000000000011,
    82: 0x4000000000000000000d7,
    83: 0x800000000000000000095,
    84: 0x1000000000000000000021,
    85: 0x2000000000000000000107,
    86: 0x4000000000000000000065,
    87: 0x80000000000000000000a3,
    88: 0x1000000000000000000003f,
    89: 0x20000000000000000000069,
    90: 0x4000000000000000000002d,
    91: 0x800000000000000000000ed,
    92: 0x100000000000000000000065,
    93: 0x200000000000000000000005,
    94: 0x400000000000000000000063,
    95: 0x800000000000000000000077,
    96: 0x100000000000000000000006f,
    97: 0x2000000000000000000000041,
    98: 0x4000000000000000000000099,
    99: 0x800000000000000000000004b,
    100: 0x10000000000000000000000065,
    101: 0x200000000000000000000000c3,
    102: 0x40000000000000000000000069,
    103: 0x800000000000000000000000bd,
    104: 0x10000000000000000000000001b,
    105: 0x200000000000000000000000011,
    106: 0x400000000000000000000000063,
    107: 0x8000000000000000000000000af,
    108: 0x1000000000000000000000000053,
    109: 0x2000000000000000000000000035,
    110: 0x4000000000000000000000000053,
    111: 0x8000000000000000000000000095,
    112: 0x10000000000000000000000000039,
    113: 0x2000000000000000000000000002d,
    114: 0x4000000000000000000000000002d,
    115: 0x800000000000000000000000000af,
    116: 0x100000000000000000000000000017,
    117: 0x200000000000000000000000000027,
    118: 0x400000000000000000000000000065,
    119: 0x800000000000000000000000000101,
    120: 0x100000000000000000000000000001b,
    121: 0x2000000000000000000000000000123,
    122: 0x4000000000000000000000000000047,
    123: 0x8000000000000000000000000000005,
    124: 0x1000000000000000000000000000007d,
    125: 0x200000000000000000000000000000af,
    126: 0x40000000000000000000000000000095,
    127: 0x80000000000000000000000000000003,
    128: 0x100000000000000000000000000000087,
    129: 0x200000000000000000000000000000021,
    130: 0x400000000000000000000000000000009,
    131: 0x8000000000000000000000000000000f3,
    132: 0x1000000000000000000000000000000077,
    133: 0x200000000000000000000000000000006f,
    134: 0x40000000000000000000000000000000a3,
    135: 0x8000000000000000000000000000000059,
    136: 0x1000000000000000000000000000000002d,
    137: 0x2000000000000000000000000000000013d,
    138: 0x4000000000000000000000000000000016d,
    139: 0x800000000000000000000000000000000af,
    140: 0x100000000000000000000000000000000053,
    141: 0x2000000000000000000000000000000001ab,
    142: 0x4000000000000000000000000000000000f3,
    143: 0x80000000000000000000000000000000002d,
    144: 0x1000000000000000000000000000000000095,
    145: 0x2000000000000000000000000000000000063,
    146: 0x400000000000000000000000000000000002d,
    147: 0x800000000000000000000000000000000003f,
    148: 0x100000000000000000000000000000000000a9,
    149: 0x200000000000000000000000000000000002fb,
    150: 0x40000000000000000000000000000000000035,
    151: 0x80000000000000000000000000000000000009,
    152: 0x10000000000000000000000000000000000004d,
    153: 0x200000000000000000000000000000000000003,
    154: 0x4000000000000000000000000000000000000e1,
    155: 0x8000000000000000000000000000000000000b1,
    156: 0x1000000000000000000000000000000000000069,
    157: 0x2000000000000000000000000000000000000065,
    158: 0x4000000000000000000000000000000000000137,
    159: 0x800000000000000000000000000000000000007b,
    160: 0x1000000000000000000000000000000000000002d,
    256: 0x10000000000000000000000000000000000000000000000000000000000000425,
    257: 0x200000000000000000000000000000000000000000000000000000000000000bd,
    512: 0x100000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000125,
    513: 0x2000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000001e3,
    1024: 0x100000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000002cd,
    1025: 0x200000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000f5,
}
