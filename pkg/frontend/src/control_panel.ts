// Control panel: mode buttons, reset, the pointing slider, and the
// annotation toolbox. Every click maps to exactly one protocol message;
// the panel renders server state and never mutates it locally.

import { AnnotationShape, ClientMessage, ModeName, Role, Snapshot } from "./types";

const MODES: { name: ModeName; label: string }[] = [
  { name: "helper_led", label: "Helper-led" },
  { name: "robot_led", label: "Robot-led" },
  { name: "worker_led", label: "Worker-led" },
];

const ANNOTATION_SHAPES: AnnotationShape[] = ["pin", "rectangle", "arrow"];

export class ControlPanel {
  readonly root: HTMLElement;
  private send: (msg: ClientMessage) => void;
  private role: Role;
  private modeButtons = new Map<ModeName, HTMLButtonElement>();
  private resetButton: HTMLButtonElement;
  private sliderInput: HTMLInputElement;
  private toolboxToggle: HTMLButtonElement;
  private shapeButtons = new Map<AnnotationShape, HTMLButtonElement>();
  private statusLine: HTMLElement;
  private brakeBanner: HTMLElement;
  private freezeBadge: HTMLElement;
  toolboxOpen = false;
  activeShape: AnnotationShape = "pin";
  onShapeChange?: (shape: AnnotationShape | null) => void;

  constructor(root: HTMLElement, role: Role, send: (msg: ClientMessage) => void) {
    this.root = root;
    this.role = role;
    this.send = send;

    const modeRow = document.createElement("div");
    modeRow.className = "mode-row";
    for (const { name, label } of MODES) {
      const btn = document.createElement("button");
      btn.textContent = label;
      btn.dataset.mode = name;
      btn.addEventListener("click", () => this.send({ type: "mode_select", mode: name }));
      this.modeButtons.set(name, btn);
      modeRow.appendChild(btn);
    }
    root.appendChild(modeRow);

    this.resetButton = document.createElement("button");
    this.resetButton.textContent = "Reset";
    this.resetButton.className = "reset-button";
    this.resetButton.addEventListener("click", () => this.send({ type: "reset" }));
    root.appendChild(this.resetButton);

    const sliderRow = document.createElement("label");
    sliderRow.className = "point-slider";
    this.sliderInput = document.createElement("input");
    this.sliderInput.type = "checkbox";
    this.sliderInput.disabled = true;
    this.sliderInput.addEventListener("change", () => {
      this.send({ type: "point_slider", enabled: this.sliderInput.checked });
    });
    sliderRow.appendChild(this.sliderInput);
    sliderRow.appendChild(document.createTextNode(" accept worker's point"));
    root.appendChild(sliderRow);

    this.toolboxToggle = document.createElement("button");
    this.toolboxToggle.textContent = "Annotate";
    this.toolboxToggle.className = "toolbox-toggle";
    this.toolboxToggle.addEventListener("click", () => this.setToolbox(!this.toolboxOpen));
    root.appendChild(this.toolboxToggle);

    const shapeRow = document.createElement("div");
    shapeRow.className = "shape-row";
    shapeRow.style.display = "none";
    for (const shape of ANNOTATION_SHAPES) {
      const btn = document.createElement("button");
      btn.textContent = shape;
      btn.dataset.shape = shape;
      btn.addEventListener("click", () => {
        this.activeShape = shape;
        this.onShapeChange?.(shape);
        this.refreshShapeRow();
      });
      this.shapeButtons.set(shape, btn);
      shapeRow.appendChild(btn);
    }
    root.appendChild(shapeRow);
    this.shapeRow = shapeRow;

    this.freezeBadge = document.createElement("div");
    this.freezeBadge.className = "freeze-badge";
    this.freezeBadge.textContent = "MOTION FROZEN";
    this.freezeBadge.style.display = "none";
    root.appendChild(this.freezeBadge);

    this.brakeBanner = document.createElement("div");
    this.brakeBanner.className = "brake-banner";
    this.brakeBanner.textContent = "EMERGENCY BRAKE - reset to recover";
    this.brakeBanner.style.display = "none";
    root.appendChild(this.brakeBanner);

    this.statusLine = document.createElement("div");
    this.statusLine.className = "status-line";
    root.appendChild(this.statusLine);

    if (role === "worker") {
      // workers see mode selection only; helper controls stay visible but inert
      this.resetButton.disabled = true;
      this.toolboxToggle.disabled = true;
    }
  }

  private shapeRow: HTMLElement;

  setToolbox(open: boolean): void {
    if (this.toolboxOpen === open) return;
    this.toolboxOpen = open;
    this.shapeRow.style.display = open ? "" : "none";
    this.send({ type: open ? "annotate_begin" : "annotate_end" });
    this.onShapeChange?.(open ? this.activeShape : null);
    this.refreshShapeRow();
  }

  private refreshShapeRow(): void {
    for (const [shape, btn] of this.shapeButtons) {
      btn.classList.toggle("active", shape === this.activeShape);
    }
  }

  update(snapshot: Snapshot): void {
    for (const [name, btn] of this.modeButtons) {
      btn.classList.toggle("active", snapshot.mode_state.mode === name);
    }
    // the slider is enabled only while the camera sees a pointing gesture,
    // and only on helper consoles
    this.sliderInput.disabled =
      this.role !== "helper" || !snapshot.mode_state.pointing_detected;
    this.sliderInput.checked = snapshot.mode_state.pointing_enabled;
    this.brakeBanner.style.display = snapshot.mode_state.braked ? "" : "none";
    this.freezeBadge.style.display = snapshot.mode_state.annotating ? "" : "none";
    const diag = snapshot.diagnostics.map((d) => d.message).join("; ");
    this.statusLine.textContent =
      `tick ${snapshot.tick}  mode ${snapshot.mode_state.mode}` +
      (snapshot.mode_state.tracking_lost ? "  [tracking lost]" : "") +
      (diag ? `  | ${diag}` : "");
  }
}
