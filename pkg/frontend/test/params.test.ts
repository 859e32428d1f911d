// Parameter blob codec: byte-exact round-trips against the real
// params.bin fixtures and semantic checks on decoded tree fields.

import { describe, expect, it } from "vitest";

import { checkTreeParams, decodeParams, encodeParams, ParamsError } from "../src/index.js";
import { readFixtureBytes, readUnit } from "./helpers.js";

describe("decode/encode round-trip", () => {
  for (const v of ["tree_maploaded", "mlp_maploaded"] as const) {
    it(`reproduces ${v}/params.bin byte-for-byte`, () => {
      const unit = readUnit(v);
      const blob = readFixtureBytes(`${v}/params.bin`);
      expect(blob.byteLength).toBe(unit.manifest.blob.byte_size);
      const fields = decodeParams(unit.manifest, blob);
      expect([...fields.keys()]).toEqual(unit.manifest.blob.layout.map((f) => f.name));
      for (const f of unit.manifest.blob.layout) {
        expect(fields.get(f.name)).toHaveLength(f.len_words);
      }
      const re = encodeParams(unit.manifest, fields);
      expect(Buffer.from(re).equals(Buffer.from(blob))).toBe(true);
    });
  }

  it("rejects a wrong-size blob", () => {
    const unit = readUnit("tree_maploaded");
    const blob = readFixtureBytes("tree_maploaded/params.bin");
    expect(() => decodeParams(unit.manifest, blob.slice(0, blob.length - 8))).toThrow(ParamsError);
    const padded = new Uint8Array(blob.length + 8);
    padded.set(blob);
    expect(() => decodeParams(unit.manifest, padded)).toThrow(ParamsError);
  });

  it("rejects encode with a missing field", () => {
    const unit = readUnit("mlp_maploaded");
    const fields = decodeParams(unit.manifest, readFixtureBytes("mlp_maploaded/params.bin"));
    fields.delete("b2");
    expect(() => encodeParams(unit.manifest, fields)).toThrow(/b2/);
  });

  it("rejects encode with a wrong-length field", () => {
    const unit = readUnit("mlp_maploaded");
    const fields = decodeParams(unit.manifest, readFixtureBytes("mlp_maploaded/params.bin"));
    fields.set("b1", new BigInt64Array(3));
    expect(() => encodeParams(unit.manifest, fields)).toThrow(/b1/);
  });
});

describe("tree parameter semantics", () => {
  it("accepts the real tree blob", () => {
    const unit = readUnit("tree_maploaded");
    const fields = decodeParams(unit.manifest, readFixtureBytes("tree_maploaded/params.bin"));
    expect(checkTreeParams(unit.manifest, fields)).toEqual([]);
  });

  it("flags an out-of-range feature index", () => {
    const unit = readUnit("tree_maploaded");
    const fields = decodeParams(unit.manifest, readFixtureBytes("tree_maploaded/params.bin"));
    const feat = fields.get("feature") as BigInt64Array;
    const leaf = fields.get("leaf") as BigInt64Array;
    let poisoned = -1;
    for (let i = 0; i < feat.length; i++) {
      if (leaf[i] === 0n) {
        feat[i] = 99n;
        poisoned = i;
        break;
      }
    }
    expect(poisoned).toBeGreaterThanOrEqual(0);
    expect(checkTreeParams(unit.manifest, fields).join(" ")).toContain("feature");
  });

  it("flags a child pointer past the padded node count", () => {
    const unit = readUnit("tree_maploaded");
    const fields = decodeParams(unit.manifest, readFixtureBytes("tree_maploaded/params.bin"));
    const left = fields.get("left") as BigInt64Array;
    const leaf = fields.get("leaf") as BigInt64Array;
    for (let i = 0; i < left.length; i++) {
      if (leaf[i] === 0n) {
        left[i] = BigInt(unit.manifest.padded_nodes ?? 0) + 5n;
        break;
      }
    }
    expect(checkTreeParams(unit.manifest, fields).length).toBeGreaterThan(0);
  });
});
