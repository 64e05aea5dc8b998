// SPA entry point: wires the view state, API client, and renderers to the
// DOM. Served by the service at /ui (or any static host with the API
// reachable at the same origin).

import { ApiClient, ApiError } from "./api.js";
import { consumeStream } from "./sse.js";
import { ViewState, type View } from "./state.js";
import {
  renderCompareReport,
  renderMessageHtml,
  renderNotice,
  renderPaperList,
  renderReview,
  renderSearchHits,
  escapeHtml,
} from "./render.js";

const api = new ApiClient("");
const state = new ViewState();

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function setNotice(target: HTMLElement, message: string, retryable: boolean): void {
  target.insertAdjacentHTML("beforeend", renderNotice(message, retryable));
}

async function refreshLibrary(): Promise<void> {
  const target = el("library-list");
  try {
    const { papers } = await api.listPapers();
    target.innerHTML = renderPaperList(papers, state.selectedDocIds);
    target.querySelectorAll("input[data-doc]").forEach((box) => {
      box.addEventListener("change", () => {
        state.toggleSelection((box as HTMLElement).dataset.doc ?? "");
        updateCompareControls();
      });
    });
  } catch (err) {
    target.innerHTML = renderNotice(String(err), true);
  }
  updateCompareControls();
}

function updateCompareControls(): void {
  const button = el("compare-submit") as HTMLButtonElement;
  button.disabled = !state.canSubmitCompare();
  button.title = state.compareTooltip() ?? "";
  const review = el("review-submit") as HTMLButtonElement;
  review.disabled = !state.canSubmitReview();
}

async function ensureSession(view: View, kind: "investigate" | "read", docIds: string[]): Promise<string> {
  const existing = state.sessionsByView.get(view);
  if (existing) return existing;
  const info = await api.createSession(kind, docIds);
  state.sessionsByView.set(view, info.session_id);
  return info.session_id;
}

async function sendChat(view: View, kind: "investigate" | "read"): Promise<void> {
  const input = el(`${view}-input`) as HTMLInputElement;
  const log = el(`${view}-log`);
  const live = el(`${view}-live`);
  const content = input.value.trim();
  if (!content) return;

  const docIds = kind === "read" ? [...state.selectedDocIds].slice(0, 1) : [];
  let sessionId: string;
  try {
    sessionId = await ensureSession(view, kind, docIds);
  } catch (err) {
    setNotice(log, String(err), true);
    return;
  }
  // blocked client-side while a turn streams: no request is issued
  if (!state.beginTurn(sessionId)) return;

  log.insertAdjacentHTML("beforeend", `<div class="msg user">${escapeHtml(content)}</div>`);
  input.value = "";
  try {
    const res = await api.postMessage(sessionId, content);
    if (!res.ok) {
      const body = await res.json().catch(() => ({}));
      state.endTurn(sessionId);
      setNotice(log, `${body.error ?? res.status}: ${body.detail ?? "request failed"}`, true);
      return;
    }
    await consumeStream(res, {
      onDelta: (delta) => {
        state.appendDelta(sessionId, delta);
        live.textContent = state.streamingBuffer(sessionId);
      },
      onDone: (fullText, citations) => {
        state.endTurn(sessionId);
        live.textContent = "";
        log.insertAdjacentHTML(
          "beforeend",
          `<div class="msg assistant">${renderMessageHtml(fullText, citations)}</div>`,
        );
      },
      onError: (error, detail) => {
        state.endTurn(sessionId);
        live.textContent = "";
        setNotice(log, `${error}: ${detail}`, true);
      },
    });
  } catch (err) {
    state.endTurn(sessionId);
    setNotice(log, String(err), true);
  }
}

async function submitCompare(): Promise<void> {
  if (!state.canSubmitCompare()) return; // mirrors the server's 2-5 rule
  const target = el("compare-result");
  try {
    target.innerHTML = renderCompareReport(await api.compare([...state.selectedDocIds]));
  } catch (err) {
    target.innerHTML = renderNotice(
      err instanceof ApiError ? `${err.error}: ${err.detail}` : String(err),
      true,
    );
  }
}

async function submitReview(): Promise<void> {
  if (!state.canSubmitReview()) return;
  const target = el("review-result");
  try {
    target.innerHTML = renderReview(await api.review([...state.selectedDocIds]));
  } catch (err) {
    target.innerHTML = renderNotice(String(err), true);
  }
}

async function runSearch(): Promise<void> {
  const query = (el("search-input") as HTMLInputElement).value.trim();
  if (!query) return;
  const target = el("search-results");
  try {
    const { hits } = await api.search(query);
    target.innerHTML = renderSearchHits(hits);
  } catch (err) {
    target.innerHTML = renderNotice(String(err), true);
  }
}

async function runWriteTool(): Promise<void> {
  const text = (el("write-input") as HTMLTextAreaElement).value;
  const mode = (el("write-mode") as HTMLSelectElement).value;
  const target = el("write-result");
  try {
    if (mode === "polish") {
      const { polished } = await api.polish(text);
      target.textContent = polished;
    } else {
      const { translated } = await api.translate(text, mode);
      target.textContent = translated;
    }
  } catch (err) {
    target.innerHTML = renderNotice(String(err), true);
  }
}

function switchView(view: View): void {
  state.activeView = view;
  document.querySelectorAll<HTMLElement>("[data-view]").forEach((panel) => {
    panel.hidden = panel.dataset.view !== view;
  });
}

export function boot(): void {
  document.querySelectorAll<HTMLElement>("[data-nav]").forEach((tab) => {
    tab.addEventListener("click", () => switchView(tab.dataset.nav as View));
  });
  el("search-go").addEventListener("click", () => void runSearch());
  el("compare-submit").addEventListener("click", () => void submitCompare());
  el("review-submit").addEventListener("click", () => void submitReview());
  el("write-go").addEventListener("click", () => void runWriteTool());
  el("investigate-chat-send").addEventListener("click", () =>
    void sendChat("investigate-chat", "investigate"),
  );
  el("read-chat-send").addEventListener("click", () => void sendChat("read-chat", "read"));
  switchView("library");
  void refreshLibrary();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
