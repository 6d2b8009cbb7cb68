import { spawn, type ChildProcessByStdio } from "node:child_process";
import { createInterface, type Interface } from "node:readline";
import type { Readable, Writable } from "node:stream";

import { errorFromWire, ProtocolError } from "./errors.js";

const PROTOCOL = "trajeval-rpc v1";

interface WireResponse {
  id?: number;
  ok?: boolean;
  protocol?: string;
  result?: unknown;
  error?: { type?: string; message?: string; expected?: unknown; actual?: unknown };
}

interface Pending {
  resolve: (value: unknown) => void;
  reject: (err: Error) => void;
}

export interface SessionOptions {
  /** Python interpreter to launch; defaults to $TRAJEVAL_PYTHON or "python3". */
  python?: string;
}

/**
 * One running native endpoint (a `python -m trajeval.rpc` child process).
 *
 * Requests are JSON lines correlated by id, so many calls can be in flight on
 * a single session; keep one session per consumer and `close()` it when done.
 */
export class TrajevalSession {
  private proc: ChildProcessByStdio<Writable, Readable, null>;
  private reader: Interface;
  private pending = new Map<number, Pending>();
  private nextId = 1;
  private handshake: Promise<void>;
  private closed = false;

  constructor(options: SessionOptions = {}) {
    const python = options.python ?? process.env.TRAJEVAL_PYTHON ?? "python3";
    this.proc = spawn(python, ["-m", "trajeval.rpc"], {
      stdio: ["pipe", "pipe", "inherit"],
    });
    this.reader = createInterface({ input: this.proc.stdout });

    let helloResolve!: () => void;
    let helloReject!: (err: Error) => void;
    this.handshake = new Promise<void>((resolve, reject) => {
      helloResolve = resolve;
      helloReject = reject;
    });

    let sawHello = false;
    this.reader.on("line", (line) => {
      let msg: WireResponse;
      try {
        msg = JSON.parse(line) as WireResponse;
      } catch {
        this.failAll(new ProtocolError(`native endpoint sent non-JSON: ${line.slice(0, 120)}`));
        return;
      }
      if (!sawHello) {
        sawHello = true;
        if (msg.protocol === PROTOCOL) {
          helloResolve();
        } else {
          helloReject(new ProtocolError(
            `unexpected protocol handshake: ${JSON.stringify(msg.protocol)}`));
        }
        return;
      }
      this.dispatch(msg);
    });

    this.proc.on("error", (err) => {
      const wrapped = new ProtocolError(`failed to start native endpoint: ${err.message}`);
      helloReject(wrapped);
      this.failAll(wrapped);
    });
    this.proc.on("exit", (code) => {
      if (!this.closed) {
        const wrapped = new ProtocolError(`native endpoint exited with code ${code}`);
        helloReject(wrapped);
        this.failAll(wrapped);
      }
    });
    // avoid unhandled-rejection noise when the handshake failure is reported
    // through a pending request instead
    this.handshake.catch(() => undefined);
  }

  private dispatch(msg: WireResponse): void {
    const id = msg.id;
    if (typeof id !== "number" || !this.pending.has(id)) {
      return;
    }
    const pending = this.pending.get(id)!;
    this.pending.delete(id);
    if (msg.ok) {
      pending.resolve(msg.result);
    } else {
      pending.reject(errorFromWire(msg.error ?? {}));
    }
  }

  private failAll(err: Error): void {
    for (const pending of this.pending.values()) {
      pending.reject(err);
    }
    this.pending.clear();
  }

  /** Send one request and await its correlated response. */
  async request(op: string, body: Record<string, unknown> = {}): Promise<unknown> {
    if (this.closed) {
      throw new ProtocolError("session is closed");
    }
    await this.handshake;
    const id = this.nextId++;
    const line = JSON.stringify({ id, op, ...body });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.proc.stdin.write(line + "\n", (err) => {
        if (err) {
          this.pending.delete(id);
          reject(new ProtocolError(`write to native endpoint failed: ${err.message}`));
        }
      });
    });
  }

  /** Terminate the child process; in-flight requests reject. */
  close(): void {
    if (this.closed) {
      return;
    }
    this.closed = true;
    this.failAll(new ProtocolError("session closed"));
    this.reader.close();
    this.proc.stdin.end();
    this.proc.kill();
  }
}
