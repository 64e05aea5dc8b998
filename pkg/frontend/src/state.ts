// View state and the client-side mirrors of the server's domain rules.

export const COMPARE_MIN = 2;
export const COMPARE_MAX = 5;
export const REVIEW_MAX = 30;

export type View =
  | "library"
  | "investigate-chat"
  | "read-chat"
  | "compare"
  | "review"
  | "write";

export interface ChatTurnState {
  inFlight: boolean;
  streamingBuffer: string;
}

export class ViewState {
  activeView: View = "library";
  selectedDocIds = new Set<string>();
  sessionsByView = new Map<View, string>();
  private turns = new Map<string, ChatTurnState>();

  toggleSelection(docId: string): void {
    if (this.selectedDocIds.has(docId)) {
      this.selectedDocIds.delete(docId);
    } else {
      this.selectedDocIds.add(docId);
    }
  }

  // compare submission enabled iff 2 <= |selected| <= 5
  canSubmitCompare(): boolean {
    const n = this.selectedDocIds.size;
    return n >= COMPARE_MIN && n <= COMPARE_MAX;
  }

  compareTooltip(): string | null {
    return this.canSubmitCompare()
      ? null
      : `Select ${COMPARE_MIN} to ${COMPARE_MAX} papers to compare`;
  }

  canSubmitReview(): boolean {
    const n = this.selectedDocIds.size;
    return n >= 1 && n <= REVIEW_MAX;
  }

  private turn(sessionId: string): ChatTurnState {
    let t = this.turns.get(sessionId);
    if (!t) {
      t = { inFlight: false, streamingBuffer: "" };
      this.turns.set(sessionId, t);
    }
    return t;
  }

  // Returns false (and issues nothing) when a turn is already streaming.
  beginTurn(sessionId: string): boolean {
    const t = this.turn(sessionId);
    if (t.inFlight) return false;
    t.inFlight = true;
    t.streamingBuffer = "";
    return true;
  }

  appendDelta(sessionId: string, delta: string): void {
    this.turn(sessionId).streamingBuffer += delta;
  }

  streamingBuffer(sessionId: string): string {
    return this.turn(sessionId).streamingBuffer;
  }

  // Buffer is cleared on completion; the final text lives in the message log.
  endTurn(sessionId: string): string {
    const t = this.turn(sessionId);
    const full = t.streamingBuffer;
    t.inFlight = false;
    t.streamingBuffer = "";
    return full;
  }

  isInFlight(sessionId: string): boolean {
    return this.turn(sessionId).inFlight;
  }
}
