// Artifact readers: emit directories, dataset files, replay files, and
// the fixed-point conversions used to reconstruct exact feature words.

import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import {
  ArtifactError,
  FX_MAX,
  FxRangeError,
  fromFixed,
  parseDatasetFile,
  parseReplayFile,
  readEmitDir,
  rowToFixed,
  toFixed,
} from "../src/index.js";
import { VARIANTS, fixturePath, mkTmpDir, readFixtureText } from "./helpers.js";

describe("readEmitDir", () => {
  for (const v of VARIANTS) {
    it(`loads and verifies ${v}`, () => {
      const unit = readEmitDir(fixturePath(v));
      expect(unit.manifest.mode).toBe(v.endsWith("maploaded") ? "maploaded" : "rodata");
      expect(unit.classifySource).toContain("s32 classify(const s64 features[12])");
      expect(unit.manifestText).toBeDefined();
      if (unit.manifest.mode === "maploaded") expect(unit.paramsBlob).toBeDefined();
    });
  }

  it("refuses a directory with tampered classify.c", () => {
    const dir = mkTmpDir("unit-");
    for (const f of ["manifest.json", "classify.c", "support.c"]) {
      fs.copyFileSync(fixturePath("tree_rodata", f), path.join(dir, f));
    }
    fs.appendFileSync(path.join(dir, "classify.c"), "\n/* patched */\n");
    expect(() => readEmitDir(dir)).toThrow(/source_digest/);
  });

  it("refuses a maploaded directory missing params.bin", () => {
    const dir = mkTmpDir("unit-");
    for (const f of ["manifest.json", "classify.c", "support.c"]) {
      fs.copyFileSync(fixturePath("tree_maploaded", f), path.join(dir, f));
    }
    expect(() => readEmitDir(dir)).toThrow(/params\.bin/);
  });

  it("refuses an empty directory", () => {
    expect(() => readEmitDir(mkTmpDir("unit-"))).toThrow(ArtifactError);
  });
});

describe("dataset file", () => {
  it("parses the fixture corpus", () => {
    const ds = parseDatasetFile(readFixtureText("dataset.txt"));
    expect(ds.header.kind).toBe("dataset");
    expect(ds.X.length).toBe(ds.y.length);
    expect(ds.X.length).toBeGreaterThan(300);
    expect(ds.X[0]).toHaveLength(12);
    const malicious = ds.y.reduce((a, b) => a + b, 0);
    expect(malicious).toBeGreaterThan(0);
    expect(malicious).toBeLessThan(ds.y.length);
  });

  it("rejects a row with the wrong arity", () => {
    const text = '{"kind":"dataset","schema":1}\n1 2 3\n';
    expect(() => parseDatasetFile(text)).toThrow(/line 2/);
  });

  it("rejects a bad label", () => {
    const row = Array(12).fill("0.5").join(" ");
    expect(() => parseDatasetFile(`{"kind":"dataset","schema":1}\n${row} 2\n`)).toThrow(/label/);
  });

  it("rejects a foreign header", () => {
    expect(() => parseDatasetFile('{"kind":"trace","schema":1}\n')).toThrow(/dataset/);
  });
});

describe("fixed-point reconstruction", () => {
  it("round-trips every fixture dataset value exactly", () => {
    // dataset floats are raw/65536 with raw < 2^53, so the float is an
    // exact binary representation and the conversion must be lossless
    const ds = parseDatasetFile(readFixtureText("dataset.txt"));
    for (const row of ds.X) {
      const fx = rowToFixed(row);
      for (let i = 0; i < 12; i++) {
        expect(fromFixed(fx[i] as bigint)).toBe(row[i]);
      }
    }
  });

  it("converts known anchors", () => {
    expect(toFixed(0)).toBe(0n);
    expect(toFixed(1)).toBe(65536n);
    expect(toFixed(-1.5)).toBe(-98304n);
    expect(toFixed(0.25)).toBe(16384n);
    expect(fromFixed(FX_MAX)).toBeCloseTo(2 ** 47, -1);
  });

  it("rounds half away from zero", () => {
    expect(toFixed(1 / 131072)).toBe(1n);
    expect(toFixed(-1 / 131072)).toBe(-1n);
  });

  it("rejects values outside the exact-integer window", () => {
    expect(() => toFixed(Number.MAX_SAFE_INTEGER)).toThrow(FxRangeError);
    expect(() => toFixed(Number.POSITIVE_INFINITY)).toThrow(FxRangeError);
    expect(() => toFixed(Number.NaN)).toThrow(FxRangeError);
  });
});

describe("replay file", () => {
  it("parses every fixture replay", () => {
    for (const v of VARIANTS) {
      const rep = parseReplayFile(readFixtureText(`rep_${v}.json`));
      expect(rep.schema).toBe(1);
      expect(rep.predictions.length).toBeGreaterThan(300);
      expect(rep.report.path).toBe("generated");
      for (const p of rep.predictions.slice(0, 10)) {
        expect([0, 1]).toContain(p.pred);
        expect([0, 1]).toContain(p.label);
      }
    }
  });

  it("rejects a wrong schema", () => {
    expect(() => parseReplayFile('{"schema":2,"predictions":[],"report":{}}')).toThrow(/schema/);
  });
});
