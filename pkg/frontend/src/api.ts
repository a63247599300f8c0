// HTTP client for the skinning service: JSON for skeleton/baselines/pose
// bodies, the compact binary format for point clouds.

export interface SkeletonInfo {
  version: number;
  spheres: { id: number; center: number[]; radius: number }[];
  bones: { id: number; start: number; end: number }[];
  chains: number[][];
  point_count?: number;
}

export interface BaselinePolyline {
  azimuth: number;
  chain: number;
  points: number[][];
  bone_ids: number[];
}

export interface PoseBody {
  version: number;
  pose: {
    bends: { joint_sphere_id: number; axis: number[]; angle_rad: number }[];
    twists: { bone_id: number; angle_rad: number }[];
    anatomy: {
      sphere_scales: Record<string, number>;
      bone_length_scales: Record<string, number>;
    };
  };
  method: string;
  lod: number;
}

/** Parse the wire format: count u32 little-endian, then count*3 float32. */
export function parsePointBuffer(buf: ArrayBuffer): Float32Array {
  if (buf.byteLength < 4) {
    throw new Error(`point buffer too short: ${buf.byteLength} bytes`);
  }
  const count = new DataView(buf).getUint32(0, true);
  const expected = 4 + 12 * count;
  if (buf.byteLength !== expected) {
    throw new Error(
      `point buffer length mismatch: ${buf.byteLength} bytes for ${count} points` +
      ` (expected ${expected})`);
  }
  return new Float32Array(buf, 4, count * 3);
}

export class ApiClient {
  constructor(private base: string = "") {}

  async health(): Promise<boolean> {
    try {
      const r = await fetch(`${this.base}/api/health`);
      return r.ok;
    } catch {
      return false;
    }
  }

  async skeleton(): Promise<SkeletonInfo> {
    const r = await fetch(`${this.base}/api/skeleton`);
    if (!r.ok) throw new Error(`skeleton fetch failed: ${r.status}`);
    return (await r.json()) as SkeletonInfo;
  }

  async points(lod: number): Promise<Float32Array> {
    const r = await fetch(`${this.base}/api/points?lod=${lod}`);
    if (!r.ok) throw new Error(`points fetch failed: ${r.status}`);
    return parsePointBuffer(await r.arrayBuffer());
  }

  async pointsRaw(lod: number): Promise<ArrayBuffer> {
    const r = await fetch(`${this.base}/api/points?lod=${lod}`);
    if (!r.ok) throw new Error(`points fetch failed: ${r.status}`);
    return r.arrayBuffer();
  }

  async baselines(count: number): Promise<BaselinePolyline[]> {
    const r = await fetch(`${this.base}/api/baselines?count=${count}`);
    if (!r.ok) throw new Error(`baselines fetch failed: ${r.status}`);
    const d = await r.json();
    return d.baselines as BaselinePolyline[];
  }

  async pose(body: PoseBody): Promise<ArrayBuffer> {
    const r = await fetch(`${this.base}/api/pose`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!r.ok) {
      let detail = `${r.status}`;
      try {
        const e = await r.json();
        if (e && e.error) detail = `${r.status}: ${e.error}`;
      } catch { /* non-JSON error body */ }
      throw new Error(`pose request failed (${detail})`);
    }
    return r.arrayBuffer();
  }
}
