// Pose studio entry point: slider panel wired to the debounced pose
// scheduler, three.js viewer for the returned clouds, optional baseline
// overlay.

import { ApiClient, parsePointBuffer } from "./api.js";
import { UiPoseState, Method } from "./poseState.js";
import { PoseScheduler } from "./scheduler.js";
import { Viewer } from "./viewer.js";

const api = new ApiClient("");
const canvas = document.getElementById("view") as HTMLCanvasElement;
const panel = document.getElementById("panel") as HTMLDivElement;
const status = document.getElementById("status") as HTMLSpanElement;
const toast = document.getElementById("toast") as HTMLDivElement;

let viewer: Viewer;
let state: UiPoseState;
let initialFrame: ArrayBuffer | null = null;

function showToast(msg: string): void {
  toast.textContent = msg;
  toast.classList.add("show");
  setTimeout(() => toast.classList.remove("show"), 4000);
}

const scheduler = new PoseScheduler<ReturnType<UiPoseState["toBody"]>, ArrayBuffer>({
  send: (body) => api.pose(body),
  onResult: (buf) => {
    try {
      viewer.setCloud(parsePointBuffer(buf));
      status.textContent = "";
    } catch (e) {
      showToast(String(e)); // keep the previous frame on bad buffers
    }
  },
  onError: (err) => {
    status.textContent = "";
    showToast(String(err));
  },
  onBusyChange: (busy) => {
    status.textContent = busy ? "updating…" : "";
  },
});

function sliderRow(label: string, min: number, max: number, step: number,
                   value: number, onInput: (v: number) => void): HTMLElement {
  const row = document.createElement("div");
  row.className = "row";
  const name = document.createElement("label");
  name.textContent = label;
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = String(min);
  slider.max = String(max);
  slider.step = String(step);
  slider.value = String(value);
  const num = document.createElement("span");
  num.className = "val";
  num.textContent = value.toFixed(2);
  slider.addEventListener("input", () => {
    const v = parseFloat(slider.value);
    num.textContent = v.toFixed(2);
    onInput(v);
  });
  row.append(name, slider, num);
  (row as HTMLElement & { _slider?: HTMLInputElement })._slider = slider;
  return row;
}

function submit(): void {
  scheduler.submit(state.toBody());
}

function buildPanel(): void {
  panel.innerHTML = "";
  const h1 = document.createElement("h3");
  h1.textContent = "joints (bend angle, rad)";
  panel.append(h1);
  for (const j of state.joints) {
    panel.append(sliderRow(`joint ${j.jointSphereId}`, j.minRad, j.maxRad, 0.01,
                           j.angleRad, (v) => {
      j.angleRad = v;
      submit();
    }));
    const axisRow = document.createElement("div");
    axisRow.className = "row axis";
    const label = document.createElement("label");
    label.textContent = "axis";
    axisRow.append(label);
    ["x", "y", "z"].forEach((name, k) => {
      const inp = document.createElement("input");
      inp.type = "number";
      inp.step = "0.1";
      inp.value = String(j.axis[k]);
      inp.title = `axis ${name}`;
      inp.addEventListener("change", () => {
        j.axis[k] = parseFloat(inp.value) || 0;
        if (j.angleRad !== 0) submit();
      });
      axisRow.append(inp);
    });
    panel.append(axisRow);
  }
  const h2 = document.createElement("h3");
  h2.textContent = "twists (rad)";
  panel.append(h2);
  for (const t of state.twists) {
    panel.append(sliderRow(`bone ${t.boneId}`, -Math.PI, Math.PI, 0.01,
                           t.angleRad, (v) => {
      t.angleRad = v;
      submit();
    }));
  }
  const h3 = document.createElement("h3");
  h3.textContent = "anatomy (scales)";
  panel.append(h3);
  for (const t of state.twists) {
    panel.append(sliderRow(`bone ${t.boneId} length`, 0.5, 1.8, 0.01, 1.0, (v) => {
      state.boneLengthScales.set(t.boneId, v);
      submit();
    }));
  }

  const controls = document.createElement("div");
  controls.className = "controls";

  const method = document.createElement("select");
  for (const m of ["baseline", "lbs", "dqs"]) {
    const o = document.createElement("option");
    o.value = m;
    o.textContent = m;
    method.append(o);
  }
  method.addEventListener("change", () => {
    state.method = method.value as Method;
    submit();
  });

  const reset = document.createElement("button");
  reset.textContent = "reset pose";
  reset.addEventListener("click", () => {
    state.reset();
    buildPanel(); // sliders back to zero
    scheduler.submitNow(state.toBody());
  });

  const overlay = document.createElement("button");
  overlay.textContent = "baselines on/off";
  overlay.addEventListener("click", async () => {
    // overlay toggles never trigger a pose request
    if (state.overlayBaselines > 0) {
      state.overlayBaselines = 0;
      viewer.clearBaselines();
      return;
    }
    state.overlayBaselines = 16;
    try {
      viewer.setBaselines(await api.baselines(state.overlayBaselines));
    } catch (e) {
      state.overlayBaselines = 0;
      showToast(`overlay unavailable: ${e}`);
    }
  });

  const lod = document.createElement("select");
  for (const k of [10_000, 50_000, 100_000, 500_000]) {
    const o = document.createElement("option");
    o.value = String(k);
    o.textContent = `LOD ${k.toLocaleString()}`;
    if (k === state.lod) o.selected = true;
    lod.append(o);
  }
  lod.addEventListener("change", async () => {
    state.lod = parseInt(lod.value, 10);
    if (state.isIdentity) {
      const raw = await api.pointsRaw(state.lod);
      initialFrame = raw;
      viewer.setCloud(parsePointBuffer(raw), true);
    } else {
      submit();
    }
  });

  controls.append(method, lod, reset, overlay);
  panel.append(controls);
}

async function boot(): Promise<void> {
  if (!(await api.health())) {
    showToast("skinning service unreachable; start it with: bskin serve");
    return;
  }
  viewer = new Viewer(canvas);
  const sk = await api.skeleton();
  state = UiPoseState.fromSkeleton(sk);
  const raw = await api.pointsRaw(state.lod);
  initialFrame = raw;
  viewer.setCloud(parsePointBuffer(raw), true);
  buildPanel();
}

boot().catch((e) => showToast(String(e)));

export { initialFrame }; // handy for console inspection
