// Pure chat view state: every server reply maps to a new state whose
// pendingInteraction mirrors the reply type exactly. Malformed or unknown
// payloads set the error banner and leave messages and pending untouched.

import type {
  AgentReply,
  ChatViewState,
  PendingInteraction,
  SessionStateWire,
  SideQuestion,
  TranscriptEvent,
} from "./types.js";

export const REPHRASE_HINT = "try saying it another way";
export const DEFERRED_HINT = "type an answer (or: i dont know)";
export const SLOT_HINT = "answer the question above";

export function initialState(): ChatViewState {
  return { sessionId: null, messages: [], pending: { kind: "none" }, hint: "", error: null };
}

export function echoUser(state: ChatViewState, text: string): ChatViewState {
  return { ...state, messages: [...state.messages, { speaker: "user", text }] };
}

function agentMessage(state: ChatViewState, text: string, replyType: string) {
  return [...state.messages, { speaker: "agent" as const, text, replyType }];
}

function sidePending(side: SideQuestion): PendingInteraction {
  if (side.replyType === "AskVerify") {
    return { kind: "verify", factText: side.question };
  }
  return { kind: "deferred", questionText: side.question };
}

function isSide(value: unknown): value is SideQuestion {
  const side = value as SideQuestion;
  return (
    !!side &&
    (side.replyType === "AskVerify" || side.replyType === "AskDeferred") &&
    typeof side.question === "string"
  );
}

export function applyReply(state: ChatViewState, reply: AgentReply): ChatViewState {
  const banner = (message: string): ChatViewState => ({ ...state, error: message });
  if (!reply || typeof reply !== "object" || typeof reply.replyType !== "string") {
    return banner("malformed reply from server");
  }
  switch (reply.replyType) {
    case "ExecuteResult":
    case "Answer": {
      if (typeof reply.text !== "string") return banner("malformed reply from server");
      let messages = agentMessage(state, reply.text, reply.replyType);
      let pending: PendingInteraction = { kind: "none" };
      if (reply.side !== undefined) {
        if (!isSide(reply.side)) return banner("malformed reply from server");
        messages = [
          ...messages,
          { speaker: "agent", text: reply.side.question, replyType: reply.side.replyType },
        ];
        pending = sidePending(reply.side);
      }
      return { ...state, messages, pending, hint: "", error: null };
    }
    case "Options": {
      if (!Array.isArray(reply.options) || reply.options.some((o) => typeof o !== "string")) {
        return banner("malformed reply from server");
      }
      return {
        ...state,
        messages: agentMessage(state, reply.prompt, "Options"),
        pending: { kind: "options", options: [...reply.options] },
        hint: "",
        error: null,
      };
    }
    case "AskRephrase": {
      if (typeof reply.text !== "string") return banner("malformed reply from server");
      return {
        ...state,
        messages: agentMessage(state, reply.text, "AskRephrase"),
        pending: { kind: "none" },
        hint: REPHRASE_HINT,
        error: null,
      };
    }
    case "AskSlot": {
      if (typeof reply.argName !== "string" || typeof reply.prompt !== "string") {
        return banner("malformed reply from server");
      }
      return {
        ...state,
        messages: agentMessage(state, reply.prompt, "AskSlot"),
        pending: { kind: "slot", argName: reply.argName },
        hint: SLOT_HINT,
        error: null,
      };
    }
    case "AskVerify":
    case "AskDeferred": {
      if (!isSide(reply)) return banner("malformed reply from server");
      return {
        ...state,
        messages: agentMessage(state, reply.question, reply.replyType),
        pending: sidePending(reply),
        hint: reply.replyType === "AskDeferred" ? DEFERRED_HINT : "",
        error: null,
      };
    }
    case "Apology": {
      if (typeof reply.text !== "string") return banner("malformed reply from server");
      return {
        ...state,
        messages: agentMessage(state, reply.text, "Apology"),
        pending: { kind: "none" },
        hint: "",
        error: null,
      };
    }
    default:
      return banner(`unknown reply type: ${(reply as { replyType: string }).replyType}`);
  }
}

// Rebuild the whole view from the server's session record (page reload,
// or resynchronization after a 409).
export function restoreFromServer(wire: SessionStateWire): ChatViewState {
  let state: ChatViewState = { ...initialState(), sessionId: wire.sessionId };
  for (const event of wire.transcript) {
    state = applyTranscriptEvent(state, event);
  }
  return { ...state, pending: pendingFromServer(wire.pending), error: null };
}

function applyTranscriptEvent(state: ChatViewState, event: TranscriptEvent): ChatViewState {
  switch (event.kind) {
    case "user_utterance":
    case "user_rephrase":
      return echoUser(state, String(event.text ?? ""));
    case "slot_answer":
      return echoUser(state, (event.value as string[] | undefined)?.join(" ") ?? "");
    case "option_chosen":
      return echoUser(state, `option-${event.index}`);
    case "option_declined":
      return echoUser(state, "none of these");
    case "agent_reply": {
      const next = applyReply(state, event.reply as AgentReply);
      return next.error === null ? next : state; // skip unrenderable history
    }
    default:
      return state;
  }
}

export function pendingFromServer(
  pending: SessionStateWire["pending"],
): PendingInteraction {
  if (!pending) return { kind: "none" };
  switch (pending.kind) {
    case "options":
      return { kind: "options", options: [...pending.options] };
    case "slot":
      return { kind: "slot", argName: pending.argName };
    case "verify":
      return { kind: "verify", factText: pending.question };
    case "deferred":
      return { kind: "deferred", questionText: pending.question };
    case "rephrase":
    default:
      return { kind: "none" };
  }
}

// The expected input kind for each phase the server can report; used to
// assert the view FSM mirror in tests.
export function expectedPendingKind(phase: string): PendingInteraction["kind"] {
  switch (phase) {
    case "AwaitOptionChoice":
      return "options";
    case "AwaitSlot":
      return "slot";
    case "AwaitSideAnswer":
      return "verify"; // or "deferred"; both are side answers
    default:
      return "none";
  }
}
