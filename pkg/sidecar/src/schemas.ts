/**
 * Zod schemas for the wire contracts. The JSON Schema files under ../schemas
 * are the shared source of truth; the vitest contract suite validates live
 * responses against those files, while these zod schemas guard requests at
 * runtime.
 */

import { z } from "zod";

export const EmbedRequest = z
  .object({
    texts: z.array(z.string().min(1)),
  })
  .strict();

export type EmbedRequest = z.infer<typeof EmbedRequest>;

export const EmbedResponse = z
  .object({
    dim: z.number().int().min(1),
    vectors: z.array(z.array(z.number()).min(1)),
  })
  .strict();

export type EmbedResponse = z.infer<typeof EmbedResponse>;

export const DescribeRequest = z
  .object({
    image_t: z.string().min(1),
    image_t2: z.string().min(1),
    system: z.string().min(1),
    user: z.string().min(1),
    deterministic: z.boolean(),
  })
  .strict();

export type DescribeRequest = z.infer<typeof DescribeRequest>;

export const DescribeResponse = z
  .object({
    text: z.string().min(1),
  })
  .strict();

export type DescribeResponse = z.infer<typeof DescribeResponse>;

export const HealthzResponse = z
  .object({
    dim: z.number().int().min(1),
    models: z.record(z.string()),
  })
  .strict();

export type HealthzResponse = z.infer<typeof HealthzResponse>;
