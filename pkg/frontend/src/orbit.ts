// Orbit camera state: azimuth/elevation/distance around a target, pure math
// so the interaction logic is testable without a renderer.

export interface OrbitState {
  azimuth: number;
  elevation: number;
  distance: number;
  target: [number, number, number];
}

const MIN_DISTANCE = 1e-3;
const MAX_ELEVATION = Math.PI / 2 - 1e-3;

export function defaultOrbit(): OrbitState {
  return { azimuth: 0.6, elevation: 0.35, distance: 10, target: [0, 0, 0] };
}

export function rotate(o: OrbitState, dAz: number, dEl: number): OrbitState {
  return {
    ...o,
    azimuth: o.azimuth + dAz,
    elevation: Math.max(-MAX_ELEVATION, Math.min(MAX_ELEVATION, o.elevation + dEl)),
  };
}

export function zoom(o: OrbitState, factor: number): OrbitState {
  return { ...o, distance: Math.max(MIN_DISTANCE, o.distance * factor) };
}

export function pan(o: OrbitState, dx: number, dy: number): OrbitState {
  // pan in the camera's screen plane
  const [rx, ry] = [Math.sin(o.azimuth), Math.cos(o.azimuth)];
  const right: [number, number, number] = [ry, 0, -rx];
  const up: [number, number, number] = [0, 1, 0];
  const s = o.distance;
  return {
    ...o,
    target: [
      o.target[0] + s * (dx * right[0] + dy * up[0]),
      o.target[1] + s * (dx * right[1] + dy * up[1]),
      o.target[2] + s * (dx * right[2] + dy * up[2]),
    ],
  };
}

export function eyePosition(o: OrbitState): [number, number, number] {
  const ce = Math.cos(o.elevation);
  return [
    o.target[0] + o.distance * ce * Math.sin(o.azimuth),
    o.target[1] + o.distance * Math.sin(o.elevation),
    o.target[2] + o.distance * ce * Math.cos(o.azimuth),
  ];
}

/** Fit the orbit to a cloud's bounding sphere. */
export function fitToPoints(o: OrbitState, xyz: Float32Array): OrbitState {
  if (xyz.length < 3) return o;
  let minX = Infinity, minY = Infinity, minZ = Infinity;
  let maxX = -Infinity, maxY = -Infinity, maxZ = -Infinity;
  for (let i = 0; i < xyz.length; i += 3) {
    minX = Math.min(minX, xyz[i]); maxX = Math.max(maxX, xyz[i]);
    minY = Math.min(minY, xyz[i + 1]); maxY = Math.max(maxY, xyz[i + 1]);
    minZ = Math.min(minZ, xyz[i + 2]); maxZ = Math.max(maxZ, xyz[i + 2]);
  }
  const target: [number, number, number] = [
    (minX + maxX) / 2, (minY + maxY) / 2, (minZ + maxZ) / 2];
  const diag = Math.hypot(maxX - minX, maxY - minY, maxZ - minZ);
  return { ...o, target, distance: Math.max(MIN_DISTANCE, diag * 1.2) };
}
