// Chat view state as a pure function of the service responses received.
// The reducer never computes anything numeric beyond copying payload values;
// replaying a recorded response transcript reproduces the exact view state.

import type { FeedbackAck, ServiceInfo, SlotBelief, TurnPayload } from "./api.js";

export type Role = "user" | "agent";

export interface Message {
  role: Role;
  text: string;
}

export type Status =
  | "connecting"
  | "open"
  | "terminal"
  | "feedback-sent"
  | "error";

export interface ChatViewState {
  sessionId: string | null;
  slots: string[];
  messages: Message[];
  beliefs: SlotBelief[];
  kb: { count: number; available: boolean } | null;
  turnIndex: number;
  status: Status;
  inFlight: boolean;
  feedbackSubmitted: boolean;
  loggedReward: number | null;
  feedbackTurns: number | null;
  error: string | null;
}

export type ChatEvent =
  | { kind: "info"; payload: ServiceInfo }
  | { kind: "session-created"; payload: TurnPayload }
  | { kind: "user-message"; text: string }
  | { kind: "send-start" }
  | { kind: "turn"; payload: TurnPayload }
  | { kind: "feedback-start" }
  | { kind: "feedback-ack"; payload: FeedbackAck }
  | { kind: "service-error"; message: string }
  | { kind: "reset" };

export function initialState(): ChatViewState {
  return {
    sessionId: null,
    slots: [],
    messages: [],
    beliefs: [],
    kb: null,
    turnIndex: 0,
    status: "connecting",
    inFlight: false,
    feedbackSubmitted: false,
    loggedReward: null,
    feedbackTurns: null,
    error: null,
  };
}

function applyTurn(state: ChatViewState, payload: TurnPayload): ChatViewState {
  return {
    ...state,
    sessionId: payload.session_id,
    messages: [...state.messages, { role: "agent", text: payload.agent_text }],
    beliefs: payload.beliefs,
    kb: payload.kb,
    turnIndex: payload.turn_index,
    status: payload.terminal ? "terminal" : "open",
    inFlight: false,
    error: null,
  };
}

export function reduce(state: ChatViewState, event: ChatEvent): ChatViewState {
  switch (event.kind) {
    case "info":
      return { ...state, slots: event.payload.slots };
    case "session-created":
      return applyTurn({ ...initialState(), slots: state.slots }, event.payload);
    case "user-message":
      return {
        ...state,
        messages: [...state.messages, { role: "user", text: event.text }],
      };
    case "send-start":
      return { ...state, inFlight: true };
    case "turn":
      return applyTurn(state, event.payload);
    case "feedback-start":
      return { ...state, inFlight: true };
    case "feedback-ack":
      return {
        ...state,
        inFlight: false,
        feedbackSubmitted: true,
        status: "feedback-sent",
        loggedReward: event.payload.logged_reward,
        feedbackTurns: event.payload.turns,
      };
    case "service-error":
      return { ...state, inFlight: false, status: "error", error: event.message };
    case "reset":
      return { ...initialState(), slots: state.slots };
  }
}

// Whitespace-only input never enables the send control.
export function canSend(state: ChatViewState, draft: string): boolean {
  return state.status === "open" && !state.inFlight && draft.trim().length > 0;
}

export function canSubmitFeedback(state: ChatViewState): boolean {
  return state.status === "terminal" && !state.feedbackSubmitted && !state.inFlight;
}

// Displayed probabilities come verbatim from the payload, formatted to 2 decimals.
export function formatProbability(p: number): string {
  return p.toFixed(2);
}

export function kbBucketLabel(count: number): string {
  return count >= 3 ? "3+" : String(count);
}
