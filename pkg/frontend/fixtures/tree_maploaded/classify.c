/* generated fixed-point inference unit
 * kind: tree  mode: maploaded  format: Q47.16
 * model-digest: sha256:b8aa9cdbaeae34a55893896b62472c3f89914d1ec2dc56df543fb7c23ee67990
 * manifest-digest: sha256:0141378010f6cd2ad609819b0c417a1eead746cf90d5b1133ec44f58c28a9969
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
#define TREE_NODES 4
#define TREE_NODE_MASK 3
#define TREE_DEPTH 1
#define TREE_DECISION_THRESHOLD 32768LL
struct ebpfml_params_map;
extern struct ebpfml_params_map ebpfml_params;
extern void *bpf_map_lookup_elem(void *map, const void *key);
#define TREE_OFF_FEATURE 0
#define TREE_OFF_THRESHOLD 4
#define TREE_OFF_LEFT 8
#define TREE_OFF_RIGHT 12
#define TREE_OFF_LEAF 16
s32 classify(const s64 features[12])
{
    s64 x[16];
    u32 node = 0;
    u32 d;
    s64 f;
    u32 key = 0;
    const s64 *p;

    p = (const s64 *)bpf_map_lookup_elem((void *)&ebpfml_params, (const void *)&key);
    if (!p)
        return -1;
    for (d = 0; d < 12; d++)
        x[d] = features[d];
    for (d = 12; d < 16; d++)
        x[d] = 0;
    for (d = 0; d < TREE_DEPTH; d++) {
        f = p[TREE_OFF_FEATURE + (node & TREE_NODE_MASK)];
        if (f < 0)
            break;
        if (x[f & 15] <= p[TREE_OFF_THRESHOLD + (node & TREE_NODE_MASK)])
            node = (u32)p[TREE_OFF_LEFT + (node & TREE_NODE_MASK)];
        else
            node = (u32)p[TREE_OFF_RIGHT + (node & TREE_NODE_MASK)];
    }
    return (s32)(p[TREE_OFF_LEAF + (node & TREE_NODE_MASK)] >= TREE_DECISION_THRESHOLD);
}
