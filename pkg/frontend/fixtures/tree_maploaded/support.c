/* fixed-point runtime support (Q47.16) */
#ifndef EBPFML_TYPES_DEFINED
#define EBPFML_TYPES_DEFINED
typedef signed char s8;
typedef short s16;
typedef int s32;
typedef long long s64;
typedef unsigned char u8;
typedef unsigned short u16;
typedef unsigned int u32;
typedef unsigned long long u64;
#ifndef __always_inline
#define __always_inline inline __attribute__((always_inline))
#endif
#endif
#ifndef EBPFML_FX_DEFINED
#define EBPFML_FX_DEFINED
#define FX_MIN (-9223372036854775807LL - 1)
#define FX_MAX 9223372036854775807LL
#endif
#ifndef EBPFML_FX_HELPERS_DEFINED
#define EBPFML_FX_HELPERS_DEFINED
static __always_inline s64 fx_add(s64 a, s64 b)
{
    s64 r = (s64)((u64)a + (u64)b);

    if (((a ^ r) & (b ^ r)) < 0)
        return (r < 0) ? FX_MAX : FX_MIN;
    return r;
}
static __always_inline s64 fx_sub(s64 a, s64 b)
{
    s64 r = (s64)((u64)a - (u64)b);

    if (((a ^ b) & (a ^ r)) < 0)
        return (a < 0) ? FX_MIN : FX_MAX;
    return r;
}
static __always_inline s64 fx_mul(s64 a, s64 b)
{
    u64 ua = (u64)a;
    u64 ub = (u64)b;
    u64 al = ua & 0xffffffffULL;
    u64 ah = ua >> 32;
    u64 bl = ub & 0xffffffffULL;
    u64 bh = ub >> 32;
    u64 ll = al * bl;
    u64 lh = al * bh;
    u64 hl = ah * bl;
    u64 hh = ah * bh;
    u64 mid = lh + (ll >> 32);
    u64 mid2 = hl + (mid & 0xffffffffULL);
    u64 lo = (ll & 0xffffffffULL) | (mid2 << 32);
    u64 hi = hh + (mid >> 32) + (mid2 >> 32);
    s64 shhi;
    s64 r;

    if (a < 0)
        hi = hi - ub;
    if (b < 0)
        hi = hi - ua;
    shhi = (s64)hi >> 16;
    r = (s64)((lo >> 16) | (hi << 48));
    if (shhi != (r >> 63))
        return (shhi < 0) ? FX_MIN : FX_MAX;
    return r;
}
static const s64 fx_log2_lut[256] = {
    0, 369, 736, 1102, 1466, 1829, 2190, 2551,
    2909, 3267, 3623, 3978, 4331, 4683, 5034, 5384,
    5732, 6079, 6425, 6769, 7112, 7454, 7795, 8134,
    8473, 8810, 9146, 9480, 9814, 10146, 10477, 10807,
    11136, 11464, 11791, 12116, 12440, 12764, 13086, 13407,
    13727, 14046, 14363, 14680, 14996, 15310, 15624, 15937,
    16248, 16559, 16868, 17177, 17484, 17791, 18096, 18401,
    18704, 19007, 19308, 19609, 19909, 20207, 20505, 20802,
    21098, 21393, 21687, 21980, 22272, 22564, 22854, 23144,
    23433, 23720, 24007, 24293, 24579, 24863, 25146, 25429,
    25711, 25992, 26272, 26551, 26830, 27108, 27384, 27660,
    27936, 28210, 28484, 28757, 29029, 29300, 29571, 29840,
    30109, 30378, 30645, 30912, 31178, 31443, 31707, 31971,
    32234, 32496, 32758, 33019, 33279, 33538, 33797, 34055,
    34312, 34569, 34825, 35080, 35334, 35588, 35841, 36094,
    36346, 36597, 36847, 37097, 37346, 37595, 37842, 38090,
    38336, 38582, 38827, 39072, 39316, 39559, 39802, 40044,
    40286, 40527, 40767, 41006, 41246, 41484, 41722, 41959,
    42196, 42432, 42667, 42902, 43137, 43370, 43603, 43836,
    44068, 44300, 44530, 44761, 44990, 45220, 45448, 45676,
    45904, 46131, 46357, 46583, 46809, 47034, 47258, 47482,
    47705, 47928, 48150, 48372, 48593, 48813, 49034, 49253,
    49472, 49691, 49909, 50127, 50344, 50560, 50776, 50992,
    51207, 51422, 51636, 51850, 52063, 52276, 52488, 52700,
    52911, 53122, 53332, 53542, 53751, 53960, 54169, 54377,
    54584, 54791, 54998, 55204, 55410, 55615, 55820, 56025,
    56229, 56432, 56635, 56838, 57040, 57242, 57443, 57644,
    57845, 58045, 58245, 58444, 58643, 58841, 59039, 59237,
    59434, 59631, 59827, 60023, 60219, 60414, 60609, 60803,
    60997, 61190, 61384, 61576, 61769, 61961, 62152, 62343,
    62534, 62725, 62915, 63104, 63294, 63483, 63671, 63859,
    64047, 64234, 64421, 64608, 64794, 64980, 65166, 65351,
};
static __always_inline s64 fx_log2(s64 v)
{
    u64 uv;
    u64 m;
    u32 msb = 0;
    u32 idx;
    u32 carry;
    s64 ip;

    if (v <= 0)
        return FX_MIN;
    uv = (u64)v;
    if (uv >= (1ULL << 32)) {
        uv = uv >> 32;
        msb = msb + 32;
    }
    if (uv >= (1ULL << 16)) {
        uv = uv >> 16;
        msb = msb + 16;
    }
    if (uv >= (1ULL << 8)) {
        uv = uv >> 8;
        msb = msb + 8;
    }
    if (uv >= (1ULL << 4)) {
        uv = uv >> 4;
        msb = msb + 4;
    }
    if (uv >= (1ULL << 2)) {
        uv = uv >> 2;
        msb = msb + 2;
    }
    if (uv >= 2)
        msb = msb + 1;
    m = ((u64)v) << (62 - msb);
    idx = (u32)((m >> 53) & 0x1ff);
    idx = (idx + 1) >> 1;
    carry = idx >> 8;
    idx = idx & 0xff;
    ip = (s64)((s32)msb - 16 + (s32)carry);
    return (ip << 16) + fx_log2_lut[idx & 0xff];
}
static __always_inline s64 fx_entropy(const u64 hist[256], u64 n)
{
    s64 acc = 0;
    s64 p;
    u32 i;

    if (n == 0)
        return 0;
    for (i = 0; i < 256; i++) {
        p = (s64)(((hist[i] << 16) + (n >> 1)) / n);
        if (p <= 0)
            continue;
        acc = fx_add(acc, fx_mul(p, fx_log2(p)));
    }
    acc = fx_sub(0, acc);
    if (acc < 0)
        acc = 0;
    if (acc > (8LL << 16))
        acc = 8LL << 16;
    return acc;
}
static __always_inline s64 fx_chi2(const u64 hist[256], u64 n)
{
    u64 s = 0;
    u64 q;
    u64 r;
    s64 acc;
    u32 i;

    if (n == 0)
        return 0;
    for (i = 0; i < 256; i++)
        s = s + hist[i] * hist[i];
    s = s << 8;
    q = s / n;
    r = s - q * n;
    acc = (s64)((q << 16) + ((r << 16) / n)) - (s64)(n << 16);
    if (acc < 0)
        acc = 0;
    return acc;
}
#endif
