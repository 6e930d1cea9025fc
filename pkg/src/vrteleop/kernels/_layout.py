"""Column layout of planned profiles and IK status codes, shared by both backends."""

# per-joint profile record
P0, V0, T1, A1, VC, T2, T3, A3, PF, VF, TT = range(11)
NPROF = 11

OK, UNREACHABLE, SINGULAR, LIMITS = 0, 1, 2, 3
