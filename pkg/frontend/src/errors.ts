/** Error types raised by the binding layer and mapped from native responses. */

export class TrajevalError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "TrajevalError";
  }
}

/** Input arrays do not satisfy the (K, N, T, 2) / (N, T, 2) contract. */
export class ShapeMismatchError extends TrajevalError {
  readonly expected: string;
  readonly actual: string;

  constructor(message: string, expected: string, actual: string) {
    super(`${message} (expected ${expected}, got ${actual})`);
    this.name = "ShapeMismatchError";
    this.expected = expected;
    this.actual = actual;
  }
}

/** The native side rejected the request (bad option values and the like). */
export class NativeError extends TrajevalError {
  /** Exception type name reported by the native process. */
  readonly nativeType: string;

  constructor(nativeType: string, message: string) {
    super(`${nativeType}: ${message}`);
    this.name = "NativeError";
    this.nativeType = nativeType;
  }
}

/** The native process died, spoke a different protocol, or sent garbage. */
export class ProtocolError extends TrajevalError {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

interface WireError {
  type?: string;
  message?: string;
  expected?: unknown;
  actual?: unknown;
}

export function errorFromWire(err: WireError): TrajevalError {
  const type = err.type ?? "UnknownError";
  const message = err.message ?? "native call failed";
  if (type === "ShapeError") {
    return new ShapeMismatchError(message, JSON.stringify(err.expected ?? null),
      JSON.stringify(err.actual ?? null));
  }
  if (type === "ProtocolError") {
    return new ProtocolError(message);
  }
  return new NativeError(type, message);
}
