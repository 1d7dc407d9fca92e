// Browser glue: wires the ConsoleApp to the DOM. Everything interesting lives
// in app.ts / model.ts / render.ts, which the tests exercise headlessly.

import { ConsoleApp } from "./app.js";
import { FetchTransport, ServiceClient } from "./client.js";

const root = document.getElementById("app")!;
const form = document.getElementById("connect") as HTMLFormElement;

let app: ConsoleApp | null = null;

function redraw(): void {
  if (!app) return;
  root.innerHTML = app.render();
  const accept = root.querySelector('[data-role="accept"]');
  if (accept) {
    accept.addEventListener("click", async () => {
      await app!.accept();
      redraw();
    });
  }
  const override = root.querySelector('[data-role="override"]') as HTMLFormElement | null;
  if (override) {
    override.addEventListener("submit", async (ev) => {
      ev.preventDefault();
      const data = new FormData(override);
      await app!.override(String(data.get("action")), String(data.get("worker")));
      redraw();
    });
  }
}

form.addEventListener("submit", async (ev) => {
  ev.preventDefault();
  const data = new FormData(form);
  const base = String(data.get("base") || "http://127.0.0.1:8765");
  const client = new ServiceClient(new FetchTransport(base));
  app?.close();
  app = new ConsoleApp(client);

  const sessionId = String(data.get("session") || "").trim();
  const scenarioText = String(data.get("scenario") || "").trim();
  try {
    if (sessionId) {
      await app.attach(sessionId);
      window.localStorage.setItem("ergoalloc-session", sessionId);
    } else if (scenarioText) {
      await app.create(JSON.parse(scenarioText));
      window.localStorage.setItem("ergoalloc-session", app.sessionId ?? "");
    }
  } catch (err) {
    root.innerHTML = `<p class="error">${String(err)}</p>`;
    return;
  }
  redraw();
  // live updates arrive on the event stream; re-render as they do
  window.setInterval(redraw, 1000);
});

const remembered = window.localStorage.getItem("ergoalloc-session");
if (remembered) {
  (form.elements.namedItem("session") as HTMLInputElement).value = remembered;
}
