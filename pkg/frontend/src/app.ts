/** Page bootstrap: a connection bar (service base URL + annotator id —
 * the only configuration the client has) above the queue. */

import { ApiClient } from "./api.js";
import type { AnnotatorApi } from "./queue.js";
import { QueueController } from "./queue.js";

export interface AppHandles {
  baseUrlInput: HTMLInputElement;
  annotatorInput: HTMLInputElement;
  connectBtn: HTMLButtonElement;
  queueRoot: HTMLElement;
  /** The live controller, replaced on every connect. */
  controller: () => QueueController | null;
}

export interface AppOptions {
  /** Test seam; defaults to the real HTTP client. */
  createApi?: (baseUrl: string) => AnnotatorApi;
  defaultBaseUrl?: string;
}

export function initApp(root: HTMLElement, options: AppOptions = {}): AppHandles {
  const doc = root.ownerDocument;
  const win = doc.defaultView as (Window & { PROOFPIPE_BASE_URL?: string }) | null;
  const defaultBaseUrl =
    options.defaultBaseUrl ?? win?.PROOFPIPE_BASE_URL ?? "http://127.0.0.1:8765";
  const createApi = options.createApi ?? ((baseUrl: string) => new ApiClient(baseUrl));

  root.innerHTML =
    `<header class="connect-bar">` +
    `<label>Service <input type="url" class="base-url" value=""></label>` +
    `<label>Annotator <input type="text" class="annotator-id" value="" ` +
    `placeholder="your reviewer id"></label>` +
    `<button type="button" class="connect-btn">Connect</button>` +
    `</header>` +
    `<main class="queue-root"></main>`;

  const baseUrlInput = root.querySelector(".base-url") as HTMLInputElement;
  const annotatorInput = root.querySelector(".annotator-id") as HTMLInputElement;
  const connectBtn = root.querySelector(".connect-btn") as HTMLButtonElement;
  const queueRoot = root.querySelector(".queue-root") as HTMLElement;
  baseUrlInput.value = defaultBaseUrl;

  let controller: QueueController | null = null;
  const connect = () => {
    const annotatorId = annotatorInput.value.trim();
    if (annotatorId === "") {
      annotatorInput.focus();
      queueRoot.innerHTML =
        `<div class="banner banner-error">Enter an annotator id before connecting.</div>`;
      controller = null;
      return;
    }
    controller = new QueueController(queueRoot, createApi(baseUrlInput.value.trim()), {
      annotatorId,
    });
    void controller.load();
  };
  connectBtn.addEventListener("click", connect);

  return {
    baseUrlInput,
    annotatorInput,
    connectBtn,
    queueRoot,
    controller: () => controller,
  };
}

// Auto-boot when loaded as the page script.
if (typeof document !== "undefined") {
  const mount = document.getElementById("app");
  if (mount !== null) {
    initApp(mount);
  }
}
