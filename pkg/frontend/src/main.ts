// Browser entry point: connect, then re-render the whole app on every frame.

import { App, bindDom } from "./controller.js";
import { WorldSocket } from "./net.js";
import { renderApp } from "./render.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");

  // the world server speaks raw WebSocket on its own port, so a statically
  // hosted page points at it with ?server=ws://host:port/
  const override = new URLSearchParams(location.search).get("server");
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const url = override ?? `${proto}://${location.host}/`;
  const socket = await WorldSocket.connect(url, WebSocket);

  const app = new App(socket, (state) => {
    root.innerHTML = renderApp(state);
  });
  socket.onClose = () => {
    root.innerHTML = '<p class="disconnected">Connection closed. Reload to rejoin.</p>';
  };
  bindDom(root, app);
  root.innerHTML = renderApp(app.state);
}

boot().catch((err) => {
  const root = document.getElementById("app");
  if (root) root.textContent = `failed to connect: ${err}`;
});
