/* generated fixed-point inference unit
 * kind: mlp  mode: rodata  format: Q47.16
 * model-digest: sha256:b3d57e4bfdefdc44b50cb16605ad792b8741338e5d6b3aa9f4e096b312c34f09
 * manifest-digest: sha256:493a1404332ac74ff3da883936a1452b384c4dd557ca1887c9da2ecb0575e191
 */
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
#define MLP_DECISION_THRESHOLD 0LL
static const s64 mlp_w1[8][12] = {
    { -26665LL, 36LL, 603LL, -6869LL, -25276LL, 6503LL, -3376LL, -1503LL, 1531LL, 7823LL, 0LL, 0LL },
    { 11691LL, -450LL, -3297LL, 4059LL, 12230LL, 500LL, 2826LL, 120LL, 1500LL, -14760LL, 0LL, 0LL },
    { -10534LL, 126LL, -2080LL, 4264LL, 26371LL, -5688LL, -457LL, -1055LL, -1435LL, 20374LL, 0LL, 0LL },
    { 12446LL, -510LL, 3237LL, -4008LL, -33521LL, -4012LL, -1095LL, -47LL, 1387LL, 11957LL, -1LL, 0LL },
    { -24422LL, 946LL, -154LL, 3255LL, -31971LL, -7058LL, 2678LL, 475LL, -551LL, -11175LL, -1LL, 0LL },
    { -34130LL, 660LL, -92LL, -5339LL, 17176LL, -4737LL, -3816LL, 520LL, 1368LL, -27055LL, 1LL, 0LL },
    { -29226LL, -840LL, -1964LL, 3791LL, -490LL, 5415LL, -2160LL, -702LL, -720LL, 27268LL, 1LL, 0LL },
    { -4595LL, -377LL, 1931LL, -7328LL, -31054LL, -1071LL, -1928LL, 1396LL, 722LL, 3694LL, 0LL, 0LL },
};
static const s64 mlp_b1[8] = {
    -29291LL, 72474LL, 70899LL, -3290LL, 153139LL, 161801LL, -109692LL, -73115LL,
};
static const s64 mlp_w2[8] = {
    -4667LL, 163798LL, -11179LL, 112820LL, -58777LL, -87684LL, 115578LL, 40781LL,
};
static const s64 mlp_b2[1] = {
    -43382LL,
};
#ifndef EBPFML_FX_DEFINED
#define EBPFML_FX_DEFINED
#define FX_MIN (-9223372036854775807LL - 1)
#define FX_MAX 9223372036854775807LL
#endif
static __always_inline s64 fx_add(s64 a, s64 b)
{
    s64 r = (s64)((u64)a + (u64)b);

    if (((a ^ r) & (b ^ r)) < 0)
        return (r < 0) ? FX_MAX : FX_MIN;
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
s32 classify(const s64 features[12])
{
    s64 h[8];
    s64 acc;
    u32 i;
    u32 j;

    for (i = 0; i < 8; i++) {
        acc = mlp_b1[i];
        for (j = 0; j < 12; j++)
            acc = fx_add(acc, fx_mul(mlp_w1[i][j], features[j]));
        h[i] = (acc > 0) ? acc : 0;
    }
    acc = mlp_b2[0];
    for (i = 0; i < 8; i++)
        acc = fx_add(acc, fx_mul(mlp_w2[i], h[i]));
    return (s32)(acc >= MLP_DECISION_THRESHOLD);
}
