import { z } from "zod";

/** Wire contract for the recommendation service's pipeline result. */
export const pipelineResultSchema = z.object({
  hour: z.number().int().min(0).max(23),
  epsilon: z.number().min(0).max(1),
  fallback: z.boolean(),
  target_feature: z.string().min(1),
  top_tags: z.array(z.object({ tag: z.string(), strength: z.number() })),
  predicted_features: z.record(z.string(), z.number()),
  recommendations: z.array(
    z.object({
      track_key: z.string(),
      track_name: z.string(),
      artist_name: z.string(),
      feature_value: z.number(),
      distance: z.number(),
      rank: z.number().int().positive(),
      novelty: z.number(),
      score: z.number(),
    }),
  ),
  explanations: z.object({
    phase1: z.string(),
    phase2: z.string(),
    phase3: z.string(),
    phase4: z.string(),
  }),
});

export type PipelineResult = z.infer<typeof pipelineResultSchema>;
export type RecommendationRow = PipelineResult["recommendations"][number];

export class SchemaMismatchError extends Error {
  constructor(detail: string) {
    super(`service payload does not match the expected schema: ${detail}`);
    this.name = "SchemaMismatchError";
  }
}

/** Validate an untrusted payload; throws SchemaMismatchError on any deviation. */
export function parsePipelineResult(payload: unknown): PipelineResult {
  const parsed = pipelineResultSchema.safeParse(payload);
  if (!parsed.success) {
    const first = parsed.error.issues[0];
    const where = first ? `${first.path.join(".") || "(root)"}: ${first.message}` : "unknown";
    throw new SchemaMismatchError(where);
  }
  return parsed.data;
}
