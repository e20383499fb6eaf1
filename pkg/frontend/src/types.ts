// Wire contract of the agent's HTTP session API.

export interface AskVerifyReply {
  replyType: "AskVerify";
  factRef: number;
  question: string;
}

export interface AskDeferredReply {
  replyType: "AskDeferred";
  questionRef: number;
  question: string;
}

export type SideQuestion = AskVerifyReply | AskDeferredReply;

export type AgentReply =
  | { replyType: "ExecuteResult"; text: string; side?: SideQuestion }
  | { replyType: "Options"; prompt: string; options: string[] }
  | { replyType: "AskRephrase"; text: string }
  | { replyType: "AskSlot"; argName: string; prompt: string }
  | { replyType: "Answer"; text: string; side?: SideQuestion }
  | { replyType: "Apology"; text: string }
  | AskVerifyReply
  | AskDeferredReply;

export type PendingInteraction =
  | { kind: "none" }
  | { kind: "options"; options: string[] }
  | { kind: "slot"; argName: string }
  | { kind: "verify"; factText: string }
  | { kind: "deferred"; questionText: string };

export interface Message {
  speaker: "user" | "agent";
  text: string;
  replyType?: string;
}

export interface ChatViewState {
  sessionId: string | null;
  messages: Message[];
  pending: PendingInteraction;
  hint: string;
  error: string | null; // non-null disables input and shows a banner
}

export interface SessionStateWire {
  sessionId: string;
  userId: string;
  phase: string;
  pending:
    | null
    | { kind: "options"; options: string[] }
    | { kind: "rephrase" }
    | { kind: "slot"; argName: string }
    | { kind: "verify"; question: string; factRef: number }
    | { kind: "deferred"; question: string; questionRef: number };
  transcript: TranscriptEvent[];
}

export interface TranscriptEvent {
  seq: number;
  session: string;
  kind: string;
  [key: string]: unknown;
}

export interface SeedCommandRow {
  id: number;
  pattern: string;
  action: string;
  taskId: string;
  provenance: string;
  user: string | null;
  alwaysElicit: string[];
}

export interface FactRow {
  id: number;
  head: string;
  relation: string;
  tail: string;
  status: string;
  text: string;
  yesVotes: number;
  noVotes: number;
}

export interface MetricRecord {
  session: string;
  user: string;
  task: number;
  outcome: string;
  action: string | null;
  questions: number;
  first_try: boolean;
  store_size: number;
}
