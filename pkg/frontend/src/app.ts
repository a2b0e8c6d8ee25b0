// Session controller: one item per screen, server-authoritative state.
// The app never stores rating state the server has not acknowledged; every
// screen is rebuilt from a fresh /next-item fetch, so a page reload lands
// exactly where the server says the session is.

import { ApiClient, NextItem, ServerRejection } from "./api.js";
import {
  renderAmendDialog,
  renderComplete,
  renderErrorBanner,
  renderItem,
  renderRetryBanner,
} from "./view.js";

export class RaterApp {
  private current: NextItem | null = null;

  constructor(
    private readonly doc: Document,
    private readonly mount: HTMLElement,
    private readonly api: ApiClient,
    private readonly sessionId: string,
  ) {}

  async start(): Promise<void> {
    await this.loadNext();
  }

  private clear(): void {
    while (this.mount.firstChild) {
      this.mount.removeChild(this.mount.firstChild);
    }
  }

  async loadNext(): Promise<void> {
    let item: NextItem;
    try {
      item = await this.api.nextItem(this.sessionId);
    } catch (error) {
      // Network/server failure: keep whatever is on screen, offer a retry.
      const message = error instanceof Error ? error.message : String(error);
      this.mount.prepend(
        renderRetryBanner(this.doc, message, () => void this.loadNext()),
      );
      return;
    }
    this.current = item;
    this.clear();
    if (item.done) {
      this.mount.appendChild(
        renderComplete(this.doc, item.progress, this.api.exportUrl(this.sessionId)),
      );
      return;
    }
    const picker = renderItem(this.doc, item);
    picker.submitButton.addEventListener("click", () => {
      void this.submit(Object.fromEntries(picker.values), false);
    });
    this.mount.appendChild(picker.root);
  }

  async submit(scores: Record<string, number>, supersede: boolean): Promise<void> {
    const item = this.current;
    if (!item || item.done || !item.case_id || !item.label) {
      return;
    }
    // Optimistic progress while the request is in flight.
    const progressNode = this.mount.querySelector(".progress");
    const optimistic = `Rated ${item.progress.rated + 1} of ${item.progress.total}`;
    const before = progressNode?.textContent ?? "";
    if (progressNode) progressNode.textContent = optimistic;

    try {
      await this.api.submitRating(this.sessionId, item.case_id, item.label,
                                  scores, supersede);
    } catch (error) {
      // Roll the optimistic update back and surface the server's verdict.
      if (progressNode) progressNode.textContent = before;
      if (error instanceof ServerRejection && error.code === "Duplicate") {
        const dialog = renderAmendDialog(this.doc, `${error.code}: ${error.message}`);
        dialog.confirmButton.addEventListener("click", () => {
          dialog.root.remove();
          void this.submit(scores, true);
        });
        dialog.cancelButton.addEventListener("click", () => {
          dialog.root.remove();
          void this.loadNext();
        });
        this.mount.prepend(dialog.root);
        return;
      }
      const code = error instanceof ServerRejection ? error.code : "NetworkError";
      const detail = error instanceof Error ? error.message : String(error);
      this.mount.prepend(renderErrorBanner(this.doc, code, detail));
      return;
    }
    await this.loadNext();
  }
}

export function bootstrap(doc: Document, baseUrl = ""): RaterApp | null {
  const mount = doc.getElementById("app");
  if (!mount) return null;
  const params = new URLSearchParams(doc.location?.search ?? "");
  const sessionId = params.get("session") ?? "";
  if (!sessionId) {
    mount.textContent = "Missing ?session=<id> in the URL.";
    return null;
  }
  const app = new RaterApp(doc, mount, new ApiClient(baseUrl), sessionId);
  void app.start();
  return app;
}
