// Orchestrates the chat: routes user input to the endpoint the pending
// interaction demands, echoes optimistically, and resynchronizes from the
// server whenever a request is rejected with a phase conflict (409).

import { ApiError, GrounderApi } from "./api.js";
import { applyReply, echoUser, initialState, restoreFromServer } from "./state.js";
import type { AgentReply, ChatViewState } from "./types.js";

export class ChatController {
  state: ChatViewState = initialState();

  constructor(
    private api: GrounderApi,
    private onChange: (state: ChatViewState) => void = () => {},
  ) {}

  private set(state: ChatViewState): void {
    this.state = state;
    this.onChange(this.state);
  }

  async start(userId: string): Promise<void> {
    const { sessionId } = await this.api.createSession(userId);
    this.set({ ...initialState(), sessionId });
  }

  async resume(sessionId: string): Promise<void> {
    this.set(restoreFromServer(await this.api.sessionState(sessionId)));
  }

  get inputBlocked(): boolean {
    return (
      this.state.error !== null ||
      this.state.pending.kind === "options" ||
      this.state.pending.kind === "verify"
    );
  }

  get blockedTooltip(): string {
    if (this.state.pending.kind === "options") return "choose an option or pick none";
    if (this.state.pending.kind === "verify") return "answer yes or no first";
    return "";
  }

  /** Free-text input: a slot value, a deferred answer, or a new command. */
  async submitText(text: string): Promise<void> {
    if (!text.trim() || this.inputBlocked || !this.state.sessionId) return;
    const sessionId = this.state.sessionId;
    const pending = this.state.pending;
    this.set(echoUser(this.state, text));
    if (pending.kind === "slot") {
      await this.call(() => this.api.slot(sessionId, pending.argName, text));
    } else if (pending.kind === "deferred") {
      await this.call(() => this.api.side(sessionId, { answer: text }));
    } else {
      await this.call(() => this.api.utterance(sessionId, text));
    }
  }

  async chooseOption(index: number | null): Promise<void> {
    if (this.state.pending.kind !== "options" || !this.state.sessionId) return;
    const sessionId = this.state.sessionId;
    this.set(echoUser(this.state, index === null ? "none of these" : `option-${index}`));
    await this.call(() => this.api.choice(sessionId, index));
  }

  async vote(vote: "yes" | "no"): Promise<void> {
    if (this.state.pending.kind !== "verify" || !this.state.sessionId) return;
    const sessionId = this.state.sessionId;
    this.set(echoUser(this.state, vote));
    await this.call(() => this.api.side(sessionId, { vote }));
  }

  private async call(send: () => Promise<AgentReply>): Promise<void> {
    try {
      this.set(applyReply(this.state, await send()));
    } catch (error) {
      if (error instanceof ApiError && error.status === 409 && this.state.sessionId) {
        await this.resume(this.state.sessionId);
        return;
      }
      this.set({ ...this.state, error: error instanceof Error ? error.message : String(error) });
    }
  }
}
