/** Typed errors mirroring the engine's error taxonomy. */

export class NoiseWarpError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** A caller-supplied array has the wrong element type. */
export class DtypeError extends NoiseWarpError {
  readonly expected: string;
  readonly received: string;
  constructor(expected: string, received: string) {
    super(`expected dtype ${expected}, received ${received}`);
    this.expected = expected;
    this.received = received;
  }
}

/** A caller-supplied array has a shape the engine cannot accept. */
export class ShapeError extends NoiseWarpError {}

/** A byte stream does not match its declared binary layout. */
export class FormatError extends NoiseWarpError {}

/** A byte stream parses but its payload is unusable (checksum, NaN...). */
export class DataError extends NoiseWarpError {}

/** The engine process failed (exit code 1: data error, 2: usage error). */
export class EngineError extends NoiseWarpError {
  readonly exitCode: number;
  readonly stderr: string;
  constructor(exitCode: number, stderr: string) {
    super(`engine exited with code ${exitCode}: ${stderr.trim()}`);
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

/** The engine ran its statistical suite and some check failed (exit 3). */
export class ValidationFailure extends NoiseWarpError {
  readonly report: unknown;
  constructor(report: unknown) {
    super("validation checks failed");
    this.report = report;
  }
}
