// Incremental parser for the service's SSE stream. Events arrive as
// "data: {json}\n\n" frames; a frame may be split across network chunks.

export type StreamEvent =
  | { kind: "delta"; text: string }
  | { kind: "done"; citations: string[] }
  | { kind: "error"; error: string; detail: string };

export class SseBuffer {
  private pending = "";

  // Feed one network chunk; returns the events completed by it.
  push(chunk: string): StreamEvent[] {
    this.pending += chunk;
    const events: StreamEvent[] = [];
    const frames = this.pending.split(/\r?\n\r?\n/);
    this.pending = frames.pop() ?? "";
    for (const frame of frames) {
      for (const line of frame.split(/\r?\n/)) {
        if (!line.startsWith("data: ")) continue;
        const parsed = parseEvent(line.slice("data: ".length));
        if (parsed) events.push(parsed);
      }
    }
    return events;
  }
}

function parseEvent(raw: string): StreamEvent | null {
  let data: Record<string, unknown>;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data.delta === "string") {
    return { kind: "delta", text: data.delta };
  }
  if (data.done) {
    const citations = Array.isArray(data.citations)
      ? data.citations.filter((c): c is string => typeof c === "string")
      : [];
    return { kind: "done", citations };
  }
  if (typeof data.error === "string") {
    return { kind: "error", error: data.error, detail: String(data.detail ?? "") };
  }
  return null;
}

export interface StreamHandlers {
  onDelta: (text: string) => void;
  onDone: (fullText: string, citations: string[]) => void;
  onError: (error: string, detail: string) => void;
}

// Drive a fetch Response body through the parser. Resolves when the stream
// ends; the concatenated deltas are passed to onDone.
export async function consumeStream(res: Response, handlers: StreamHandlers): Promise<void> {
  if (!res.body) {
    handlers.onError("EmptyBody", "response had no body");
    return;
  }
  const reader = res.body.getReader();
  const decoder = new TextDecoder("utf-8");
  const buf = new SseBuffer();
  const parts: string[] = [];
  let finished = false;
  for (;;) {
    const { value, done } = await reader.read();
    if (done) break;
    for (const event of buf.push(decoder.decode(value, { stream: true }))) {
      if (event.kind === "delta") {
        parts.push(event.text);
        handlers.onDelta(event.text);
      } else if (event.kind === "done") {
        finished = true;
        handlers.onDone(parts.join(""), event.citations);
      } else {
        handlers.onError(event.error, event.detail);
      }
    }
  }
  if (!finished) {
    handlers.onError("StreamTruncated", "stream ended without a done event");
  }
}
