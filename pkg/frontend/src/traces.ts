// Rolling time/value traces with a fixed horizon (60 s by default).

export interface TracePoint {
  t: number;
  v: number;
}

export class TraceBuffer {
  private buf: TracePoint[] = [];

  constructor(readonly horizonS: number = 60) {}

  push(t: number, v: number): void {
    const last = this.buf[this.buf.length - 1];
    if (last && t < last.t) {
      this.buf = []; // run clock restarted: a new session began
    }
    this.buf.push({ t, v });
    // oldest-first drop at the horizon
    while (this.buf.length && t - this.buf[0].t > this.horizonS) {
      this.buf.shift();
    }
  }

  points(): readonly TracePoint[] {
    return this.buf;
  }

  clear(): void {
    this.buf = [];
  }

  get length(): number {
    return this.buf.length;
  }
}
