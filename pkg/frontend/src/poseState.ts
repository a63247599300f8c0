// Editable pose state mirrored from the skeleton topology; serializes to the
// versioned pose JSON the service accepts.

import type { PoseBody, SkeletonInfo } from "./api.js";

export interface JointControl {
  jointSphereId: number;
  axis: [number, number, number];
  angleRad: number;
  minRad: number;
  maxRad: number;
}

export interface TwistControl {
  boneId: number;
  angleRad: number;
}

export type Method = "baseline" | "lbs" | "dqs";

export class UiPoseState {
  joints: JointControl[] = [];
  twists: TwistControl[] = [];
  sphereScales = new Map<number, number>();
  boneLengthScales = new Map<number, number>();
  method: Method = "baseline";
  lod = 100_000;
  overlayBaselines = 0; // 0 disables the overlay

  static fromSkeleton(sk: SkeletonInfo): UiPoseState {
    const s = new UiPoseState();
    const boneCount = new Map<number, number>();
    for (const b of sk.bones) {
      for (const sid of [b.start, b.end]) {
        boneCount.set(sid, (boneCount.get(sid) ?? 0) + 1);
      }
    }
    for (const [sid, n] of boneCount) {
      if (n >= 2) {
        s.joints.push({
          jointSphereId: sid,
          axis: [0, 0, 1],
          angleRad: 0,
          minRad: -Math.PI * 0.83,
          maxRad: Math.PI * 0.83,
        });
      }
    }
    s.joints.sort((a, b) => a.jointSphereId - b.jointSphereId);
    for (const b of sk.bones) {
      s.twists.push({ boneId: b.id, angleRad: 0 });
    }
    s.twists.sort((a, b) => a.boneId - b.boneId);
    return s;
  }

  reset(): void {
    for (const j of this.joints) j.angleRad = 0;
    for (const t of this.twists) t.angleRad = 0;
    this.sphereScales.clear();
    this.boneLengthScales.clear();
  }

  get isIdentity(): boolean {
    return (
      this.joints.every((j) => j.angleRad === 0) &&
      this.twists.every((t) => t.angleRad === 0) &&
      this.sphereScales.size === 0 &&
      this.boneLengthScales.size === 0
    );
  }

  toBody(): PoseBody {
    const bends = this.joints
      .filter((j) => j.angleRad !== 0)
      .map((j) => ({
        joint_sphere_id: j.jointSphereId,
        axis: normalize(j.axis),
        angle_rad: j.angleRad,
      }));
    const twists = this.twists
      .filter((t) => t.angleRad !== 0)
      .map((t) => ({ bone_id: t.boneId, angle_rad: t.angleRad }));
    const sphere_scales: Record<string, number> = {};
    for (const [k, v] of this.sphereScales) {
      if (v !== 1) sphere_scales[String(k)] = v;
    }
    const bone_length_scales: Record<string, number> = {};
    for (const [k, v] of this.boneLengthScales) {
      if (v !== 1) bone_length_scales[String(k)] = v;
    }
    return {
      version: 1,
      pose: { bends, twists, anatomy: { sphere_scales, bone_length_scales } },
      method: this.method,
      lod: this.lod,
    };
  }
}

function normalize(v: [number, number, number]): number[] {
  const n = Math.hypot(v[0], v[1], v[2]);
  if (n === 0) return [0, 0, 1];
  return [v[0] / n, v[1] / n, v[2] / n];
}

/** Structural check that a body matches the versioned pose schema. */
export function validatePoseBody(body: unknown): string | null {
  const b = body as PoseBody;
  if (!b || typeof b !== "object") return "body is not an object";
  if (b.version !== 1) return "missing version: 1";
  if (!b.pose || typeof b.pose !== "object") return "missing pose";
  if (!Array.isArray(b.pose.bends)) return "pose.bends must be an array";
  for (const bend of b.pose.bends) {
    if (typeof bend.joint_sphere_id !== "number") return "bend needs joint_sphere_id";
    if (!Array.isArray(bend.axis) || bend.axis.length !== 3) return "bend.axis must be [x,y,z]";
    if (typeof bend.angle_rad !== "number") return "bend.angle_rad must be a number";
  }
  if (!Array.isArray(b.pose.twists)) return "pose.twists must be an array";
  for (const t of b.pose.twists) {
    if (typeof t.bone_id !== "number" || typeof t.angle_rad !== "number") {
      return "twist entries need bone_id and angle_rad";
    }
  }
  if (!b.pose.anatomy) return "missing pose.anatomy";
  return null;
}
