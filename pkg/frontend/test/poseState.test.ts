import { describe, expect, it } from "vitest";
import type { SkeletonInfo } from "../src/api.js";
import { UiPoseState, validatePoseBody } from "../src/poseState.js";

const skeleton: SkeletonInfo = {
  version: 1,
  spheres: [
    { id: 0, center: [0, 0, 0], radius: 1 },
    { id: 1, center: [4, 0, 0], radius: 1 },
    { id: 2, center: [8, 0, 0], radius: 1 },
  ],
  bones: [
    { id: 0, start: 0, end: 1 },
    { id: 1, start: 1, end: 2 },
  ],
  chains: [[0, 1]],
};

describe("pose state", () => {
  it("derives joints and twists from the skeleton", () => {
    const s = UiPoseState.fromSkeleton(skeleton);
    expect(s.joints.map((j) => j.jointSphereId)).toEqual([1]);
    expect(s.twists.map((t) => t.boneId)).toEqual([0, 1]);
    expect(s.isIdentity).toBe(true);
  });

  it("serializes a valid versioned pose body", () => {
    const s = UiPoseState.fromSkeleton(skeleton);
    s.joints[0].angleRad = 0.7;
    s.joints[0].axis = [0, 0, 2]; // un-normalized on purpose
    s.twists[1].angleRad = -0.3;
    s.boneLengthScales.set(0, 1.2);
    const body = s.toBody();
    expect(validatePoseBody(body)).toBeNull();
    expect(body.pose.bends).toEqual([
      { joint_sphere_id: 1, axis: [0, 0, 1], angle_rad: 0.7 },
    ]);
    expect(body.pose.twists).toEqual([{ bone_id: 1, angle_rad: -0.3 }]);
    expect(body.pose.anatomy.bone_length_scales).toEqual({ "0": 1.2 });
  });

  it("identity reset clears every control", () => {
    const s = UiPoseState.fromSkeleton(skeleton);
    s.joints[0].angleRad = 1.0;
    s.twists[0].angleRad = 0.4;
    s.sphereScales.set(1, 1.3);
    expect(s.isIdentity).toBe(false);
    s.reset();
    expect(s.isIdentity).toBe(true);
    const body = s.toBody();
    expect(body.pose.bends).toEqual([]);
    expect(body.pose.twists).toEqual([]);
    expect(body.pose.anatomy.sphere_scales).toEqual({});
  });

  it("validator flags malformed bodies", () => {
    expect(validatePoseBody({})).toMatch(/version/);
    expect(validatePoseBody({ version: 1 })).toMatch(/pose/);
    expect(validatePoseBody({
      version: 1,
      pose: { bends: [{ joint_sphere_id: "x", axis: [0, 0, 1], angle_rad: 0 }],
              twists: [], anatomy: {} },
    })).toMatch(/joint_sphere_id/);
  });

  it("unit scale factors are omitted from the wire body", () => {
    const s = UiPoseState.fromSkeleton(skeleton);
    s.sphereScales.set(1, 1.0);
    s.boneLengthScales.set(0, 1.0);
    const body = s.toBody();
    expect(body.pose.anatomy.sphere_scales).toEqual({});
    expect(body.pose.anatomy.bone_length_scales).toEqual({});
    expect(s.isIdentity).toBe(false); // explicit 1.0 entries still count as edits
  });
});
