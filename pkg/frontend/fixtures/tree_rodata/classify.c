/* generated fixed-point inference unit
 * kind: tree  mode: rodata  format: Q47.16
 * model-digest: sha256:b8aa9cdbaeae34a55893896b62472c3f89914d1ec2dc56df543fb7c23ee67990
 * manifest-digest: sha256:e6d3ab31a17609131170911681c8a08d25fabee017b7dbc963575de30d20a29d
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
static const s32 tree_feature[4] = {
    2, -1, -1, -1,
};
static const s64 tree_threshold[4] = {
    32768LL, 0LL, 0LL, 0LL,
};
static const u32 tree_left[4] = {
    1, 1, 2, 3,
};
static const u32 tree_right[4] = {
    2, 1, 2, 3,
};
static const s64 tree_leaf[4] = {
    0LL, 65536LL, 0LL, 0LL,
};
s32 classify(const s64 features[12])
{
    s64 x[16];
    u32 node = 0;
    u32 d;
    s32 f;

    for (d = 0; d < 12; d++)
        x[d] = features[d];
    for (d = 12; d < 16; d++)
        x[d] = 0;
    for (d = 0; d < TREE_DEPTH; d++) {
        f = tree_feature[node & TREE_NODE_MASK];
        if (f < 0)
            break;
        if (x[f & 15] <= tree_threshold[node & TREE_NODE_MASK])
            node = tree_left[node & TREE_NODE_MASK];
        else
            node = tree_right[node & TREE_NODE_MASK];
    }
    return (s32)(tree_leaf[node & TREE_NODE_MASK] >= TREE_DECISION_THRESHOLD);
}
