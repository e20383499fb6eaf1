// DOM rendering: full re-render of the chat pane from the view state.

import type { ChatViewState } from "./types.js";
import type { ChatController } from "./controller.js";

export function renderChat(
  container: HTMLElement,
  state: ChatViewState,
  controller: ChatController,
): void {
  container.innerHTML = "";

  if (state.error !== null) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = state.error;
    container.appendChild(banner);
  }

  const log = document.createElement("div");
  log.className = "messages";
  for (const message of state.messages) {
    const bubble = document.createElement("div");
    bubble.className = `bubble ${message.speaker}`;
    if (message.replyType) bubble.dataset.replyType = message.replyType;
    bubble.textContent = message.text;
    log.appendChild(bubble);
  }
  container.appendChild(log);

  if (state.pending.kind === "options") {
    const panel = document.createElement("div");
    panel.className = "option-buttons";
    state.pending.options.forEach((text, i) => {
      const button = document.createElement("button");
      button.className = "option";
      button.dataset.index = String(i + 1);
      button.textContent = `${i + 1}. ${text}`;
      button.addEventListener("click", () => void controller.chooseOption(i + 1));
      panel.appendChild(button);
    });
    const none = document.createElement("button");
    none.className = "option none";
    none.textContent = "none of these";
    none.addEventListener("click", () => void controller.chooseOption(null));
    panel.appendChild(none);
    container.appendChild(panel);
  }

  if (state.pending.kind === "verify") {
    const panel = document.createElement("div");
    panel.className = "verify-buttons";
    for (const vote of ["yes", "no"] as const) {
      const button = document.createElement("button");
      button.className = `verify ${vote}`;
      button.textContent = vote;
      button.addEventListener("click", () => void controller.vote(vote));
      panel.appendChild(button);
    }
    container.appendChild(panel);
  }

  const form = document.createElement("form");
  form.className = "composer";
  const input = document.createElement("input");
  input.type = "text";
  input.id = "chat-input";
  input.autocomplete = "off";
  input.placeholder =
    state.hint ||
    (state.pending.kind === "slot" ? `answer: ${state.pending.argName}` : "say something");
  const send = document.createElement("button");
  send.type = "submit";
  send.textContent = "send";
  if (controller.inputBlocked) {
    input.disabled = true;
    send.disabled = true;
    input.title = controller.blockedTooltip;
    send.title = controller.blockedTooltip;
  }
  form.appendChild(input);
  form.appendChild(send);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    input.value = "";
    void controller.submitText(text);
  });
  container.appendChild(form);
}
