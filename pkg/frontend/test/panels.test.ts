// Control panel and gesture mapping: every user action emits exactly one
// protocol message, and server states (brake, freeze, slider) render as
// specified.

// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";
import { CameraFeed } from "../src/camera_feed";
import { ControlPanel } from "../src/control_panel";
import { ClientMessage, SceneDoc, Snapshot } from "../src/types";
import sceneDoc from "./fixtures/scene.json";
import snapshots from "./fixtures/snapshots.json";

const scene = sceneDoc as unknown as SceneDoc;
const nominal = snapshots.nominal as unknown as Snapshot;
const braked = snapshots.braked as unknown as Snapshot;
const annotating = snapshots.annotating as unknown as Snapshot;

function collect(): { sent: ClientMessage[]; send: (m: ClientMessage) => void } {
  const sent: ClientMessage[] = [];
  return { sent, send: (m) => sent.push(m) };
}

function stubContext(canvas: HTMLCanvasElement): void {
  const noop = () => undefined;
  const ctx = {
    canvas, fillStyle: "", strokeStyle: "", lineWidth: 1, font: "",
    fillRect: noop, strokeRect: noop, beginPath: noop, moveTo: noop,
    lineTo: noop, arc: noop, stroke: noop, fill: noop, fillText: noop,
  };
  (canvas as any).getContext = () => ctx;
}

function mouse(canvas: HTMLCanvasElement, type: string, x: number, y: number,
               button = 0): void {
  canvas.getBoundingClientRect = () =>
    ({ left: 0, top: 0, width: canvas.width, height: canvas.height,
       right: canvas.width, bottom: canvas.height, x: 0, y: 0,
       toJSON: () => ({}) } as DOMRect);
  canvas.dispatchEvent(new MouseEvent(type, { clientX: x, clientY: y, button,
                                              bubbles: true }));
}

describe("control panel", () => {
  let panel: ControlPanel;
  let sent: ClientMessage[];

  beforeEach(() => {
    document.body.innerHTML = "<div id='panel'></div>";
    const c = collect();
    sent = c.sent;
    panel = new ControlPanel(document.getElementById("panel")!, "helper", c.send);
  });

  it("mode buttons emit exactly one mode_select each", () => {
    for (const mode of ["helper_led", "robot_led", "worker_led"]) {
      sent.length = 0;
      (document.querySelector(`button[data-mode='${mode}']`) as HTMLButtonElement).click();
      expect(sent).toEqual([{ type: "mode_select", mode }]);
    }
  });

  it("reset button emits reset", () => {
    (document.querySelector(".reset-button") as HTMLButtonElement).click();
    expect(sent).toEqual([{ type: "reset" }]);
  });

  it("annotation toolbox toggles annotate_begin / annotate_end", () => {
    const toggle = document.querySelector(".toolbox-toggle") as HTMLButtonElement;
    toggle.click();
    expect(sent).toEqual([{ type: "annotate_begin" }]);
    toggle.click();
    expect(sent).toEqual([{ type: "annotate_begin" }, { type: "annotate_end" }]);
  });

  it("slider is disabled without a detected point and sends when enabled", () => {
    const slider = document.querySelector(
      ".point-slider input") as HTMLInputElement;
    panel.update(nominal);
    expect(slider.disabled).toBe(true);
    const detected = JSON.parse(JSON.stringify(nominal)) as Snapshot;
    detected.mode_state.pointing_detected = true;
    panel.update(detected);
    expect(slider.disabled).toBe(false);
    slider.checked = true;
    slider.dispatchEvent(new Event("change"));
    expect(sent.at(-1)).toEqual({ type: "point_slider", enabled: true });
  });

  it("brake banner appears exactly for braked snapshots", () => {
    const banner = document.querySelector(".brake-banner") as HTMLElement;
    panel.update(nominal);
    expect(banner.style.display).toBe("none");
    panel.update(braked);
    expect(banner.style.display).toBe("");
    panel.update(nominal);
    expect(banner.style.display).toBe("none");
  });

  it("freeze badge tracks the annotating flag", () => {
    const badge = document.querySelector(".freeze-badge") as HTMLElement;
    panel.update(annotating);
    expect(badge.style.display).toBe("");
    panel.update(nominal);
    expect(badge.style.display).toBe("none");
  });

  it("active mode button mirrors the server state", () => {
    panel.update(nominal);
    const active = document.querySelectorAll("button.active[data-mode]");
    expect(active.length).toBe(1);
    expect((active[0] as HTMLElement).dataset.mode).toBe(nominal.mode_state.mode);
  });
});

describe("camera feed gestures", () => {
  let feed: CameraFeed;
  let sent: ClientMessage[];
  let canvas: HTMLCanvasElement;

  beforeEach(() => {
    document.body.innerHTML = "";
    canvas = document.createElement("canvas");
    stubContext(canvas);
    document.body.appendChild(canvas);
    const c = collect();
    sent = c.sent;
    feed = new CameraFeed(canvas, scene, { send: c.send });
  });

  it("right-click emits one set_target_pixel at the clicked pixel", () => {
    canvas.getBoundingClientRect = () =>
      ({ left: 0, top: 0, width: canvas.width, height: canvas.height,
         right: canvas.width, bottom: canvas.height, x: 0, y: 0,
         toJSON: () => ({}) } as DOMRect);
    canvas.dispatchEvent(new MouseEvent("contextmenu",
      { clientX: 640, clientY: 360, bubbles: true, cancelable: true }));
    expect(sent).toEqual([{ type: "set_target_pixel", u: 640, v: 360 }]);
  });

  it("wheel up emits zoom with positive magnitude", () => {
    canvas.dispatchEvent(new WheelEvent("wheel", { deltaY: -120, cancelable: true }));
    expect(sent).toEqual([{ type: "adjust", kind: "zoom", magnitude: 1 }]);
    canvas.dispatchEvent(new WheelEvent("wheel", { deltaY: 120, cancelable: true }));
    expect(sent[1]).toEqual({ type: "adjust", kind: "zoom", magnitude: -1 });
  });

  it("drag without a target emits shift; with a target emits orbit", () => {
    feed.render(nominal); // nominal fixture has no target
    mouse(canvas, "mousedown", 100, 100);
    mouse(canvas, "mousemove", 140, 100);
    expect(sent.length).toBe(1);
    expect(sent[0].type).toBe("adjust");
    expect((sent[0] as any).kind).toBe("shift");
    expect((sent[0] as any).direction[0]).toBeCloseTo(1.0);
    mouse(canvas, "mouseup", 140, 100);

    const withTarget = JSON.parse(JSON.stringify(nominal)) as Snapshot;
    withTarget.mode_state.target = [0.6, 0.0, 0.2];
    feed.render(withTarget);
    sent.length = 0;
    mouse(canvas, "mousedown", 100, 100);
    mouse(canvas, "mousemove", 100, 60);  // drag up
    expect(sent.length).toBe(1);
    expect((sent[0] as any).kind).toBe("orbit");
    expect((sent[0] as any).direction[1]).toBeCloseTo(1.0); // screen up = +dv
  });

  it("annotation mode swallows drags and emits one annotation on release", () => {
    feed.annotationMode = "rectangle";
    mouse(canvas, "mousedown", 100, 100);
    mouse(canvas, "mousemove", 200, 160);
    expect(sent.length).toBe(0);    // no adjust while annotating
    mouse(canvas, "mouseup", 200, 160);
    expect(sent.length).toBe(1);
    expect(sent[0]).toEqual({ type: "annotation", shape: "rectangle",
                              points: [[100, 100], [200, 160]] });
    expect(feed.annotations.length).toBe(1);
  });

  it("remote annotations appear in the overlay store", () => {
    feed.addRemoteAnnotation("pin", [[320, 200]]);
    expect(feed.annotations.some((a) => !a.mine)).toBe(true);
  });
});
