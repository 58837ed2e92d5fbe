import { ApiClient } from "./api";
import { EventPoller } from "./poller";
import { ConsoleStore } from "./store";
import { renderApp } from "./ui";

/** Service base URL: ?api=... beats the vite dev proxy (same origin). */
function resolveBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "";
}

export function bootstrap(root: HTMLElement, baseUrl = resolveBaseUrl()): ConsoleStore {
  const api = new ApiClient(baseUrl);
  const store = new ConsoleStore(api);
  store.subscribe((state) => renderApp(root, store, state));

  let poller: EventPoller | null = null;
  let polledRunId: string | null = null;
  store.subscribe((state) => {
    if (state.selectedRunId !== polledRunId) {
      void poller?.stop();
      polledRunId = state.selectedRunId;
      if (polledRunId) {
        const runId = polledRunId;
        poller = new EventPoller(
          (after) => api.events(runId, after, 5),
          () => {
            void store.refreshRuns();
            void store.openRun(runId);
          },
        );
        poller.start();
      }
    }
  });

  void store.refreshDevices();
  void store.refreshRuns();
  renderApp(root, store, store.state);
  return store;
}

const rootElement = document.getElementById("app");
if (rootElement) {
  bootstrap(rootElement);
}
