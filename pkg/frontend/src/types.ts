/** Wire types for the design-session service, validated with zod. */

import { z } from "zod";

export const Vec3 = z.tuple([z.number(), z.number(), z.number()]);
export type Vec3T = z.infer<typeof Vec3>;

export const FrameSchema = z.object({
  position: Vec3,
  orientation: Vec3,
});
export type Frame = z.infer<typeof FrameSchema>;

export const PrimitiveSummary = z.object({
  id: z.string(),
  type: z.string(),
  closed: z.boolean(),
  shape: z.record(z.string(), z.number()),
});
export type Primitive = z.infer<typeof PrimitiveSummary>;

export const PartSummary = z.object({
  id: z.string(),
  name: z.string(),
  mass: z.number(),
  generic: z.boolean(),
  tags: z.array(z.string()),
  primitives: z.array(PrimitiveSummary),
});
export type Part = z.infer<typeof PartSummary>;

export const SessionState = z.object({
  id: z.string(),
  hash: z.string(),
  valid: z.boolean(),
  cycles: z.number(),
  environment: z.string().nullable(),
  target: z.string().nullable(),
  can_undo: z.boolean(),
  can_redo: z.boolean(),
  solving: z.boolean(),
  assembly: z.object({
    format: z.number(),
    instances: z.array(
      z.object({
        id: z.string(),
        part: z.string(),
        role: z.string(),
        overrides: z.record(z.string(), z.number()).optional(),
        fixed_frame: FrameSchema.optional(),
        goal_frame: FrameSchema.optional(),
      }),
    ),
    connections: z.array(
      z.object({
        a: z.string(),
        b: z.string(),
        alignment: z.string(),
        is_fixed: z.boolean(),
        kind: z.string(),
        dof_values: z.array(z.number()),
      }),
    ),
  }),
});
export type Session = z.infer<typeof SessionState>;

export const CompatibleResponse = z.object({
  selection: z.string(),
  compatible_types: z.array(z.string()),
  assembly: z.array(z.object({ ref: z.string(), type: z.string() })),
  palette: z.array(z.object({ ref: z.string(), type: z.string() })),
});
export type Compatible = z.infer<typeof CompatibleResponse>;

export const FallApartFlag = z.object({
  owner: z.string(),
  dof: z.string(),
  bound: z.string(),
  gradient: z.number(),
});

export const SolveReport = z.object({
  format: z.number(),
  status: z.string(),
  objective: z.number(),
  cycle_residual: z.number(),
  multi_connection_penalty: z.number(),
  connection_residual_sum: z.number(),
  energy: z.number(),
  q: z.record(z.string(), FrameSchema),
  fall_apart: z.array(FallApartFlag),
  notes: z.array(z.string()),
}).loose();
export type Report = z.infer<typeof SolveReport>;

export const SceneNode = z.object({
  name: z.string(),
  translation: Vec3,
  rotation: z.tuple([z.number(), z.number(), z.number(), z.number()]),
  extras: z.object({
    part: z.string(),
    role: z.string(),
    mass: z.number(),
    mesh_ref: z.string().nullable(),
    primitives: z.array(
      z.object({
        id: z.string(),
        type: z.string(),
        shape: z.record(z.string(), z.number()),
        base_frame: FrameSchema,
        closed: z.boolean(),
      }),
    ),
  }),
});
export type Node = z.infer<typeof SceneNode>;

export const SceneDoc = z.object({
  asset: z.object({ version: z.string() }).loose(),
  nodes: z.array(SceneNode),
}).loose();
export type Scene = z.infer<typeof SceneDoc>;

export const JobState = z.union([
  z.object({ status: z.literal("running") }),
  z.object({ status: z.literal("failed"), error: z.string() }),
  z.object({ status: z.literal("done"), report: SolveReport, scene: SceneDoc }),
]);
export type Job = z.infer<typeof JobState>;

export interface ConnectRejection {
  verdict: string;
  message: string;
}
