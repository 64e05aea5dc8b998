import { describe, expect, it } from "vitest";
import { SseBuffer, consumeStream, type StreamEvent } from "../src/sse.js";

function frame(obj: unknown): string {
  return `data: ${JSON.stringify(obj)}\n\n`;
}

describe("SseBuffer", () => {
  it("parses delta and done frames", () => {
    const buf = new SseBuffer();
    const events = buf.push(
      frame({ delta: "Hel" }) + frame({ delta: "lo" }) + frame({ done: true, citations: ["c1"] }),
    );
    expect(events).toEqual([
      { kind: "delta", text: "Hel" },
      { kind: "delta", text: "lo" },
      { kind: "done", citations: ["c1"] },
    ]);
  });

  it("handles frames split across chunk boundaries", () => {
    const buf = new SseBuffer();
    const whole = frame({ delta: "streamed text" });
    const events: StreamEvent[] = [];
    for (const piece of [whole.slice(0, 7), whole.slice(7, 15), whole.slice(15)]) {
      events.push(...buf.push(piece));
    }
    expect(events).toEqual([{ kind: "delta", text: "streamed text" }]);
  });

  it("holds an incomplete trailing frame until terminated", () => {
    const buf = new SseBuffer();
    expect(buf.push('data: {"delta": "x"}')).toEqual([]);
    expect(buf.push("\n\n")).toEqual([{ kind: "delta", text: "x" }]);
  });

  it("surfaces error events and skips unparseable data", () => {
    const buf = new SseBuffer();
    const events = buf.push(
      "data: not json\n\n" + frame({ error: "BackendFailure", detail: "down" }),
    );
    expect(events).toEqual([{ kind: "error", error: "BackendFailure", detail: "down" }]);
  });

  it("tolerates CRLF line endings", () => {
    const buf = new SseBuffer();
    const events = buf.push('data: {"delta": "a"}\r\n\r\n');
    expect(events).toEqual([{ kind: "delta", text: "a" }]);
  });
});

function fakeResponse(chunks: string[]): Response {
  const encoder = new TextEncoder();
  const stream = new ReadableStream<Uint8Array>({
    start(controller) {
      for (const c of chunks) controller.enqueue(encoder.encode(c));
      controller.close();
    },
  });
  return new Response(stream);
}

describe("consumeStream", () => {
  it("concatenates deltas into the final message", async () => {
    const res = fakeResponse([
      frame({ delta: "Hello " }),
      frame({ delta: "world" }),
      frame({ done: true, citations: ["k1", "k2"] }),
    ]);
    const deltas: string[] = [];
    let final = "";
    let cited: string[] = [];
    await consumeStream(res, {
      onDelta: (d) => deltas.push(d),
      onDone: (text, citations) => {
        final = text;
        cited = citations;
      },
      onError: () => {
        throw new Error("unexpected");
      },
    });
    expect(deltas).toEqual(["Hello ", "world"]);
    expect(final).toBe("Hello world");
    expect(cited).toEqual(["k1", "k2"]);
  });

  it("reports truncated streams as errors", async () => {
    const res = fakeResponse([frame({ delta: "partial" })]);
    let error = "";
    await consumeStream(res, {
      onDelta: () => {},
      onDone: () => {
        throw new Error("unexpected");
      },
      onError: (e) => {
        error = e;
      },
    });
    expect(error).toBe("StreamTruncated");
  });
});
