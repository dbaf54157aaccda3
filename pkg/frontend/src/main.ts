// Console entry point: four panels (camera feed, 3D view, control panel,
// annotation toolbox inside the panel), connected to the session service.
// Role and server come from the URL: ?role=helper&server=127.0.0.1:8787

import { CameraFeed } from "./camera_feed";
import { ConsoleClient } from "./client";
import { ControlPanel } from "./control_panel";
import { Role, SceneDoc, Snapshot } from "./types";
import { WorldView } from "./world_view";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const role = (params.get("role") === "worker" ? "worker" : "helper") as Role;
  const server = params.get("server") ?? `${window.location.hostname}:8787`;

  const sceneResp = await fetch(`http://${server}/scene`);
  const sceneDoc = (await sceneResp.json()).scene as SceneDoc;

  const app = document.getElementById("app")!;
  app.innerHTML = `
    <div class="layout">
      <div class="panel feed-panel"><h2>camera feed (${role})</h2></div>
      <div class="panel world-panel"><h2>3D view</h2></div>
      <div class="panel control-panel"><h2>control</h2></div>
    </div>`;

  const feedCanvas = document.createElement("canvas");
  app.querySelector(".feed-panel")!.appendChild(feedCanvas);
  const worldCanvas = document.createElement("canvas");
  app.querySelector(".world-panel")!.appendChild(worldCanvas);
  const controlRoot = app.querySelector(".control-panel") as HTMLElement;

  let latest: Snapshot | null = null;

  const client = new ConsoleClient(server, role, {
    onSnapshot: (msg) => {
      latest = msg.data;
    },
    onAnnotation: (msg) => feed.addRemoteAnnotation(msg.data.shape, msg.data.points),
    onError: (message) => {
      const toast = document.createElement("div");
      toast.className = "toast";
      toast.textContent = message;
      document.body.appendChild(toast);
      setTimeout(() => toast.remove(), 2500);
    },
    onStatus: (connected) => {
      feed.connected = connected;
    },
  });

  const feed = new CameraFeed(feedCanvas, sceneDoc, { send: (m) => client.send(m) });
  const world = new WorldView(worldCanvas, sceneDoc, role, (m) => client.send(m));
  const panel = new ControlPanel(controlRoot, role, (m) => client.send(m));
  panel.onShapeChange = (shape) => {
    feed.annotationMode = shape;
  };

  function frame(): void {
    if (latest) {
      feed.render(latest);
      world.render(latest);
      panel.update(latest);
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

boot().catch((err) => {
  document.body.textContent = `failed to start console: ${err}`;
});
