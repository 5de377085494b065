/**
 * In-process-style bindings over the engine's CLI and file formats.
 *
 * Each call stages its inputs in a temporary directory, invokes the engine
 * (default `python3 -m noisewarp`), and decodes the outputs back into typed
 * arrays.  Results are numerically bit-identical to direct CLI use with the
 * same inputs and seed; seeds are mandatory, there is no ambient
 * randomness.
 */

import { spawnSync } from "node:child_process";
import {
  mkdirSync,
  mkdtempSync,
  readdirSync,
  readFileSync,
  rmSync,
  writeFileSync,
} from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { EngineError, ValidationFailure } from "./errors.js";
import {
  FlowData,
  GridData,
  readGrid,
  readNpy,
  writeFlo,
  writeGrid,
} from "./formats.js";

export interface EngineOptions {
  /** Command used to start the engine; defaults to ["python3", "-m", "noisewarp"]. */
  command?: string[];
  /** Keep temporary staging directories (debugging). */
  keepTemp?: boolean;
}

export interface WarpOptions {
  k?: number;
  s?: number;
  seed: number;
}

export interface WarpedFrame {
  noise: GridData;
  /** 1 where the pixel's contour covered no sub-pixel before filling. */
  undefinedMask: Uint8Array;
}

export interface PriorOptions {
  width: number;
  height: number;
  channels?: number;
  frames: number;
  alpha?: number;
  threshold?: number;
  seed: number;
}

export interface ValidationReport {
  passed: boolean;
  checks: { name: string; passed: boolean; observed: number; expected: number }[];
  [key: string]: unknown;
}

export class NoiseWarpEngine {
  private readonly command: string[];
  private readonly keepTemp: boolean;

  constructor(options: EngineOptions = {}) {
    this.command =
      options.command ?? [process.env.NOISEWARP_PYTHON ?? "python3", "-m", "noisewarp"];
    this.keepTemp = options.keepTemp ?? false;
  }

  /** Run one subcommand; returns the output directory (caller cleans up). */
  private run(args: string[], allowExit3 = false): { out: string; status: number } {
    const work = mkdtempSync(join(tmpdir(), "noisewarp-"));
    const out = join(work, "out");
    const proc = spawnSync(this.command[0], [...this.command.slice(1), ...args, "--out", out], {
      encoding: "utf8",
    });
    if (proc.error) throw proc.error;
    const status = proc.status ?? -1;
    if (status !== 0 && !(allowExit3 && status === 3)) {
      if (!this.keepTemp) rmSync(work, { recursive: true, force: true });
      throw new EngineError(status, proc.stderr ?? "");
    }
    return { out, status };
  }

  private cleanup(out: string): void {
    if (!this.keepTemp) rmSync(join(out, ".."), { recursive: true, force: true });
  }

  /** Conditionally refine a grid by a power-of-two factor per axis. */
  upsample(grid: GridData, n: number, seed: number): GridData {
    const work = mkdtempSync(join(tmpdir(), "noisewarp-in-"));
    const gridPath = join(work, "input.grid");
    writeFileSync(gridPath, writeGrid(grid));
    try {
      const { out } = this.run([
        "upsample", "--grid", gridPath, "--n", String(n), "--seed", String(seed),
      ]);
      try {
        return readGrid(readFileSync(join(out, "upsampled.grid")));
      } finally {
        this.cleanup(out);
      }
    } finally {
      if (!this.keepTemp) rmSync(work, { recursive: true, force: true });
    }
  }

  /**
   * Warp an anchor grid through per-frame backward flows (or a synthetic
   * step-flow spec).  Returns frame 0 first, as the CLI does.
   */
  warpSequence(
    grid: GridData,
    flows: FlowData[] | { synthetic: string; frames: number },
    options: WarpOptions,
  ): WarpedFrame[] {
    const work = mkdtempSync(join(tmpdir(), "noisewarp-in-"));
    const gridPath = join(work, "input.grid");
    writeFileSync(gridPath, writeGrid(grid));
    const args = [
      "warp", "--grid", gridPath,
      "--k", String(options.k ?? 3), "--s", String(options.s ?? 4),
      "--seed", String(options.seed),
    ];
    if (Array.isArray(flows)) {
      const flowDir = join(work, "flows");
      mkdirSync(flowDir);
      flows.forEach((f, i) => {
        writeFileSync(join(flowDir, `${String(i + 1).padStart(4, "0")}.flo`), writeFlo(f));
      });
      args.push("--flows", flowDir);
    } else {
      args.push("--synthetic", flows.synthetic, "--frames", String(flows.frames));
    }
    try {
      const { out } = this.run(args);
      try {
        const frames: WarpedFrame[] = [];
        const names = readdirSync(out).filter((f) => /^frame_\d+\.grid$/.test(f)).sort();
        for (const name of names) {
          const idx = name.slice(6, 10);
          const noise = readGrid(readFileSync(join(out, name)));
          const mask = readNpy(readFileSync(join(out, `mask_${idx}.npy`)));
          frames.push({
            noise,
            undefinedMask: Uint8Array.from(mask.data),
          });
        }
        return frames;
      } finally {
        this.cleanup(out);
      }
    } finally {
      if (!this.keepTemp) rmSync(work, { recursive: true, force: true });
    }
  }

  /** Generate a non-warping prior sequence (random/fixed/pyoco kinds). */
  generatePrior(kind: string, options: PriorOptions): GridData[] {
    const { out } = this.run([
      "baseline", "--prior", kind,
      "--width", String(options.width), "--height", String(options.height),
      "--channels", String(options.channels ?? 1),
      "--frames", String(options.frames),
      "--alpha", String(options.alpha ?? 1.0),
      "--threshold", String(options.threshold ?? 0.1),
      "--seed", String(options.seed),
    ]);
    try {
      const names = readdirSync(out).filter((f) => /^frame_\d+\.grid$/.test(f)).sort();
      return names.map((name) => readGrid(readFileSync(join(out, name))));
    } finally {
      this.cleanup(out);
    }
  }

  /**
   * Run the statistical suite for a method.  Returns the report; throws
   * ValidationFailure (carrying the report) when any check fails.
   */
  validate(
    method: string,
    options: { trials?: number; k?: number; s?: number; seed: number },
  ): ValidationReport {
    const { out, status } = this.run(
      [
        "validate", "--method", method,
        "--trials", String(options.trials ?? 100000),
        "--k", String(options.k ?? 3), "--s", String(options.s ?? 4),
        "--seed", String(options.seed),
      ],
      true,
    );
    try {
      const report = JSON.parse(
        readFileSync(join(out, "report.json"), "utf8"),
      ) as ValidationReport;
      if (status === 3 || !report.passed) throw new ValidationFailure(report);
      return report;
    } finally {
      this.cleanup(out);
    }
  }
}
