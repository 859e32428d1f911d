/* generated fixed-point inference unit
 * kind: mlp  mode: maploaded  format: Q47.16
 * model-digest: sha256:b3d57e4bfdefdc44b50cb16605ad792b8741338e5d6b3aa9f4e096b312c34f09
 * manifest-digest: sha256:cbb5e77e6e8cf3134360f5e77f305f53785befb812bcdde6ad75a17487b1af64
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
struct ebpfml_params_map;
extern struct ebpfml_params_map ebpfml_params;
extern void *bpf_map_lookup_elem(void *map, const void *key);
#define MLP_OFF_W1 0
#define MLP_OFF_B1 96
#define MLP_OFF_W2 104
#define MLP_OFF_B2 112
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
    u32 key = 0;
    const s64 *p;

    p = (const s64 *)bpf_map_lookup_elem((void *)&ebpfml_params, (const void *)&key);
    if (!p)
        return -1;
    for (i = 0; i < 8; i++) {
        acc = p[MLP_OFF_B1 + i];
        for (j = 0; j < 12; j++)
            acc = fx_add(acc, fx_mul(p[MLP_OFF_W1 + i * 12 + j], features[j]));
        h[i] = (acc > 0) ? acc : 0;
    }
    acc = p[MLP_OFF_B2];
    for (i = 0; i < 8; i++)
        acc = fx_add(acc, fx_mul(p[MLP_OFF_W2 + i], h[i]));
    return (s32)(acc >= MLP_DECISION_THRESHOLD);
}
