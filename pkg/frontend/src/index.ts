// kernelprobe: eBPF probe skeleton + loader glue for ebpfml-emitted
// classifiers.  Everything consumes the compiler's external surface
// only: the emit directory (classify.c, support.c, manifest.json,
// params.bin) and the documented record layouts.

export { FX_FRAC_BITS, FX_ONE, FX_MIN, FX_MAX, FxRangeError, toFixed, fromFixed } from "./fixed.js";
export {
  STATE_RECORD,
  VERDICT_RECORD,
  PARAMS_MAP,
  WINDOW,
  N_FEATURES,
  EVENT_KINDS,
  checkKernelLayouts,
  type EventKindName,
} from "./layout.js";
export {
  ManifestError,
  parseManifest,
  canonicalJson,
  canonicalizeJsonText,
  manifestDigest,
  sourceDigest,
  verifyEmitUnit,
  type ModelKind,
  type EmitMode,
  type BlobField,
  type EmitManifest,
  type EmitUnit,
} from "./manifest.js";
export { ParamsError, decodeParams, encodeParams, checkTreeParams, type ParamsFields } from "./params.js";
export { StateRecordError, encodeStateRecord, decodeStateRecord, type StateRecord } from "./state.js";
export {
  VerdictError,
  encodeVerdict,
  decodeVerdict,
  decodeVerdictStream,
  VerdictDecoder,
  type Verdict,
} from "./verdict.js";
export {
  ArtifactError,
  readEmitDir,
  parseDatasetFile,
  rowToFixed,
  parseReplayFile,
  type DatasetFile,
  type ReplayFile,
  type ReplayPrediction,
} from "./artifacts.js";
export {
  HOOKS,
  assembleSkeleton,
  embeddedHelpers,
  AssemblyError,
  type HookSpec,
  type Skeleton,
  type SkeletonOptions,
} from "./skeleton.js";
export {
  ProbeError,
  UnsupportedKernelError,
  PrivilegeError,
  ToolingError,
  ParamsSizeError,
  KernelProbe,
  ProbeHandle,
  detectFeatures,
  realSystem,
  normalizePrefixes,
  kernelAtLeast,
  parseKernelRelease,
  type SystemInterface,
  type HostFeatures,
  type ExecResult,
  type AttachOptions,
  type VerdictRecord,
} from "./loader.js";
export { cliMain, type CliIo } from "./cli.js";
