import { GrounderApi } from "./api.js";
import { ChatController } from "./controller.js";
import { refreshInspector } from "./inspector.js";
import { renderChat } from "./view.js";

const SESSION_KEY = "grounder.sessionId";
const USER_KEY = "grounder.userId";

async function boot(): Promise<void> {
  const chatPane = document.getElementById("chat")!;
  const inspectorPane = document.getElementById("inspector")!;
  const api = new GrounderApi("");

  const controller = new ChatController(api, (state) => {
    renderChat(chatPane, state, controller);
    void refreshInspector(inspectorPane, api).catch(() => {});
  });

  const storedSession = sessionStorage.getItem(SESSION_KEY);
  if (storedSession) {
    try {
      await controller.resume(storedSession);
      return;
    } catch {
      sessionStorage.removeItem(SESSION_KEY);
    }
  }
  let userId = localStorage.getItem(USER_KEY);
  if (!userId) {
    userId = window.prompt("choose a user name", "me") || "me";
    localStorage.setItem(USER_KEY, userId);
  }
  await controller.start(userId);
  if (controller.state.sessionId) {
    sessionStorage.setItem(SESSION_KEY, controller.state.sessionId);
  }
}

void boot();
