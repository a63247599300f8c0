// three.js rendering layer: one Points cloud, optional baseline overlay,
// axes gizmo, orbit interaction. All pose/network logic lives elsewhere.

import * as THREE from "three";
import type { BaselinePolyline } from "./api.js";
import { OrbitState, defaultOrbit, eyePosition, fitToPoints, pan, rotate, zoom } from "./orbit.js";

const BONE_COLORS = [
  0x4c78a8, 0xf58518, 0x54a24b, 0xe45756, 0x72b7b2,
  0xeeca3b, 0xb279a2, 0xff9da6, 0x9d755d, 0xbab0ac,
];

export class Viewer {
  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private cloud: THREE.Points | null = null;
  private overlay = new THREE.Group();
  private orbit: OrbitState = defaultOrbit();
  private material: THREE.PointsMaterial;
  private dragging: "rotate" | "pan" | null = null;
  private lastXY: [number, number] = [0, 0];

  constructor(private canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: false });
    this.camera = new THREE.PerspectiveCamera(50, 1, 0.01, 5000);
    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AxesHelper(2));
    this.scene.add(this.overlay);
    this.material = new THREE.PointsMaterial({
      size: 1.5, sizeAttenuation: false, color: 0xd8e1ea,
    });
    this.bindInput();
    this.resize();
    window.addEventListener("resize", () => this.resize());
    const loop = () => {
      this.render();
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
  }

  get pointSize(): number {
    return this.material.size;
  }

  set pointSize(v: number) {
    this.material.size = v;
  }

  setCloud(xyz: Float32Array, refit = false): void {
    if (this.cloud) {
      const geo = this.cloud.geometry;
      const attr = geo.getAttribute("position") as THREE.BufferAttribute | undefined;
      if (attr && attr.array.length === xyz.length) {
        (attr.array as Float32Array).set(xyz);
        attr.needsUpdate = true;
        geo.computeBoundingSphere();
        if (refit) this.orbit = fitToPoints(this.orbit, xyz);
        return;
      }
      this.scene.remove(this.cloud);
      this.cloud.geometry.dispose();
      this.cloud = null;
    }
    const geo = new THREE.BufferGeometry();
    geo.setAttribute("position", new THREE.BufferAttribute(xyz.slice(), 3));
    geo.computeBoundingSphere();
    this.cloud = new THREE.Points(geo, this.material);
    this.scene.add(this.cloud);
    if (refit) this.orbit = fitToPoints(this.orbit, xyz);
  }

  pointCount(): number {
    if (!this.cloud) return 0;
    const attr = this.cloud.geometry.getAttribute("position");
    return attr ? attr.count : 0;
  }

  setBaselines(lines: BaselinePolyline[]): void {
    this.clearBaselines();
    for (const line of lines) {
      // split per bone so each stretch gets the bone's color
      let start = 0;
      for (let i = 1; i <= line.points.length; i++) {
        if (i === line.points.length || line.bone_ids[i] !== line.bone_ids[start]) {
          const pts = line.points.slice(start, i).map(
            (p) => new THREE.Vector3(p[0], p[1], p[2]));
          if (pts.length >= 2) {
            const geo = new THREE.BufferGeometry().setFromPoints(pts);
            const color = BONE_COLORS[line.bone_ids[start] % BONE_COLORS.length];
            this.overlay.add(new THREE.Line(
              geo, new THREE.LineBasicMaterial({ color })));
          }
          start = i;
        }
      }
    }
  }

  clearBaselines(): void {
    for (const child of [...this.overlay.children]) {
      this.overlay.remove(child);
      (child as THREE.Line).geometry?.dispose();
    }
  }

  private bindInput(): void {
    this.canvas.addEventListener("pointerdown", (e) => {
      this.dragging = e.button === 2 || e.shiftKey ? "pan" : "rotate";
      this.lastXY = [e.clientX, e.clientY];
      this.canvas.setPointerCapture(e.pointerId);
    });
    this.canvas.addEventListener("pointerup", () => (this.dragging = null));
    this.canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      const dx = (e.clientX - this.lastXY[0]) / this.canvas.clientHeight;
      const dy = (e.clientY - this.lastXY[1]) / this.canvas.clientHeight;
      this.lastXY = [e.clientX, e.clientY];
      this.orbit = this.dragging === "rotate"
        ? rotate(this.orbit, -3 * dx, 3 * dy)
        : pan(this.orbit, -dx, dy);
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.orbit = zoom(this.orbit, Math.exp(e.deltaY * 0.001));
    }, { passive: false });
    this.canvas.addEventListener("contextmenu", (e) => e.preventDefault());
  }

  private resize(): void {
    const w = this.canvas.clientWidth || this.canvas.width;
    const h = this.canvas.clientHeight || this.canvas.height;
    this.renderer.setSize(w, h, false);
    this.camera.aspect = w / Math.max(1, h);
    this.camera.updateProjectionMatrix();
  }

  private render(): void {
    const eye = eyePosition(this.orbit);
    this.camera.position.set(eye[0], eye[1], eye[2]);
    this.camera.lookAt(...this.orbit.target);
    this.renderer.render(this.scene, this.camera);
  }
}
