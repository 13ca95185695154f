// Bootstrap: wire the client, the reducer, and the DOM together.

import { ApiError, ServiceClient } from "./api.js";
import { grabElements, render } from "./render.js";
import {
  canSend,
  canSubmitFeedback,
  initialState,
  reduce,
  type ChatEvent,
  type ChatViewState,
} from "./state.js";

const client = new ServiceClient("");
let state: ChatViewState = initialState();
const els = grabElements(document);

function dispatch(event: ChatEvent): void {
  state = reduce(state, event);
  render(els, state, els.input.value);
}

async function startConversation(): Promise<void> {
  dispatch({ kind: "reset" });
  try {
    const info = await client.info();
    dispatch({ kind: "info", payload: info });
    const opening = await client.createSession("greedy");
    dispatch({ kind: "session-created", payload: opening });
  } catch (err) {
    dispatch({ kind: "service-error", message: describe(err) });
  }
}

async function sendMessage(): Promise<void> {
  const text = els.input.value;
  if (!canSend(state, text) || !state.sessionId) return;
  els.input.value = "";
  dispatch({ kind: "user-message", text });
  dispatch({ kind: "send-start" });
  try {
    const payload = await client.postMessage(state.sessionId, text);
    dispatch({ kind: "turn", payload });
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      // session closed server-side: flip to the feedback view
      dispatch({
        kind: "turn",
        payload: {
          session_id: state.sessionId,
          turn_index: state.turnIndex,
          agent_text: "(session closed)",
          beliefs: state.beliefs,
          kb: state.kb ?? { count: 0, available: false },
          action: "goodbye",
          terminal: true,
          status: "closed-failure",
        },
      });
    } else {
      dispatch({ kind: "service-error", message: describe(err) });
    }
  }
}

async function submitOutcome(success: boolean): Promise<void> {
  if (!canSubmitFeedback(state) || !state.sessionId) return;
  dispatch({ kind: "feedback-start" });
  try {
    const ack = await client.submitFeedback(state.sessionId, success);
    dispatch({ kind: "feedback-ack", payload: ack });
  } catch (err) {
    dispatch({ kind: "service-error", message: describe(err) });
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return String(err);
}

els.send.addEventListener("click", () => void sendMessage());
els.input.addEventListener("keydown", (event) => {
  if (event.key === "Enter") void sendMessage();
});
els.input.addEventListener("input", () => render(els, state, els.input.value));
els.feedback.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.id === "fb-success") void submitOutcome(true);
  if (target.id === "fb-failure") void submitOutcome(false);
  if (target.id === "new-conversation") void startConversation();
});
els.banner.addEventListener("click", () => void startConversation());

void startConversation();
