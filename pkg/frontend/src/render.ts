// DOM rendering: a thin projection of ChatViewState onto the page.

import {
  canSend,
  canSubmitFeedback,
  formatProbability,
  kbBucketLabel,
  type ChatViewState,
} from "./state.js";

export interface Elements {
  messages: HTMLElement;
  beliefs: HTMLElement;
  kb: HTMLElement;
  input: HTMLInputElement;
  send: HTMLButtonElement;
  feedback: HTMLElement;
  banner: HTMLElement;
  status: HTMLElement;
}

export function grabElements(doc: Document): Elements {
  const get = (id: string) => {
    const el = doc.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
  };
  return {
    messages: get("messages"),
    beliefs: get("beliefs"),
    kb: get("kb-indicator"),
    input: get("input") as HTMLInputElement,
    send: get("send") as HTMLButtonElement,
    feedback: get("feedback"),
    banner: get("banner"),
    status: get("status"),
  };
}

function renderMessages(el: HTMLElement, state: ChatViewState): void {
  el.innerHTML = "";
  for (const message of state.messages) {
    const bubble = document.createElement("div");
    bubble.className = `msg ${message.role}`;
    bubble.textContent = message.text;
    el.appendChild(bubble);
  }
  el.scrollTop = el.scrollHeight;
}

function renderBeliefs(el: HTMLElement, state: ChatViewState): void {
  el.innerHTML = "";
  const slots = state.beliefs.length
    ? state.beliefs
    : state.slots.map((slot) => ({ slot, top: [] }));
  for (const belief of slots) {
    const panel = document.createElement("div");
    panel.className = "slot-panel";
    const title = document.createElement("div");
    title.className = "slot-name";
    title.textContent = belief.slot;
    panel.appendChild(title);
    for (const entry of belief.top) {
      const row = document.createElement("div");
      row.className = "belief-row";
      const bar = document.createElement("div");
      bar.className = "belief-bar";
      bar.style.width = `${Math.round(entry.p * 100)}%`;
      const label = document.createElement("span");
      label.className = "belief-label";
      label.textContent = `${entry.value} ${formatProbability(entry.p)}`;
      row.appendChild(bar);
      row.appendChild(label);
      panel.appendChild(row);
    }
    el.appendChild(panel);
  }
}

function renderKb(el: HTMLElement, state: ChatViewState): void {
  if (!state.kb) {
    el.textContent = "";
    return;
  }
  const availability = state.kb.available ? "available" : "unavailable";
  el.textContent = `KB matches: ${kbBucketLabel(state.kb.count)} (${availability})`;
  el.className = state.kb.available ? "kb ok" : "kb none";
}

function renderFeedback(el: HTMLElement, state: ChatViewState): void {
  el.innerHTML = "";
  if (state.status === "feedback-sent") {
    const summary = document.createElement("div");
    summary.className = "feedback-summary";
    summary.textContent =
      `logged reward ${state.loggedReward} over ${state.feedbackTurns} turns`;
    el.appendChild(summary);
    const again = document.createElement("button");
    again.id = "new-conversation";
    again.textContent = "new conversation";
    el.appendChild(again);
    return;
  }
  if (state.status !== "terminal") return;
  const label = document.createElement("div");
  label.textContent = "dialogue finished . did the agent succeed ?";
  el.appendChild(label);
  for (const [id, text] of [["fb-success", "success"], ["fb-failure", "failure"]]) {
    const button = document.createElement("button");
    button.id = id;
    button.textContent = text;
    button.disabled = !canSubmitFeedback(state);
    el.appendChild(button);
  }
}

export function render(els: Elements, state: ChatViewState, draft: string): void {
  renderMessages(els.messages, state);
  renderBeliefs(els.beliefs, state);
  renderKb(els.kb, state);
  renderFeedback(els.feedback, state);
  els.input.disabled = state.status !== "open" || state.inFlight;
  els.send.disabled = !canSend(state, draft);
  els.banner.textContent = state.error ?? "";
  els.banner.style.display = state.error ? "block" : "none";
  els.status.textContent = state.status;
}
