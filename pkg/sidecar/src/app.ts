/**
 * Express app exposing the engine's backend wire contracts:
 *   POST /embed     {"texts": [str]}                          -> {"dim", "vectors"}
 *   POST /describe  {"image_t", "image_t2", "system", "user", "deterministic"} -> {"text"}
 *   GET  /healthz                                             -> {"dim", "models"}
 *
 * The sidecar is stateless; caching lives in the engine.
 */

import express, { type Express } from "express";

import {
  decodeImageField,
  describerFromEnv,
  type Describer,
  ImageDecodeError,
  UpstreamError,
} from "./describer.js";
import { HashEmbedder, type Embedder } from "./embedder.js";
import { DescribeRequest, EmbedRequest } from "./schemas.js";

export interface AppOptions {
  embedder?: Embedder;
  describer?: Describer;
  maxBatch?: number;
}

export const DEFAULT_MAX_BATCH = 256;

export function createApp(options: AppOptions = {}): Express {
  const embedder = options.embedder ?? new HashEmbedder(envDim());
  const describer = options.describer ?? describerFromEnv();
  const maxBatch = options.maxBatch ?? DEFAULT_MAX_BATCH;

  const app = express();
  app.use(express.json({ limit: "64mb" }));

  app.get("/healthz", (_req, res) => {
    res.json({ dim: embedder.dim, models: { embed: embedder.modelId, describe: describer.modelId } });
  });

  app.post("/embed", (req, res) => {
    const parsed = EmbedRequest.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: "invalid embed request", detail: parsed.error.issues });
      return;
    }
    const { texts } = parsed.data;
    if (texts.length === 0) {
      res.status(400).json({ error: "texts must not be empty" });
      return;
    }
    if (texts.length > maxBatch) {
      res.status(413).json({ error: `batch of ${texts.length} exceeds limit ${maxBatch}` });
      return;
    }
    res.json({ dim: embedder.dim, vectors: embedder.embed(texts) });
  });

  app.post("/describe", async (req, res) => {
    const parsed = DescribeRequest.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: "invalid describe request", detail: parsed.error.issues });
      return;
    }
    let imageT: Buffer;
    let imageT2: Buffer;
    try {
      imageT = decodeImageField(parsed.data.image_t, "image_t");
      imageT2 = decodeImageField(parsed.data.image_t2, "image_t2");
    } catch (err) {
      if (err instanceof ImageDecodeError) {
        res.status(400).json({ error: err.message });
        return;
      }
      throw err;
    }
    try {
      const text = await describer.describe({
        imageT,
        imageT2,
        system: parsed.data.system,
        user: parsed.data.user,
        deterministic: parsed.data.deterministic,
      });
      if (!text.trim()) {
        res.status(502).set("Retry-After", "5").json({ error: "model produced empty text" });
        return;
      }
      res.json({ text: text.trim() });
    } catch (err) {
      if (err instanceof UpstreamError) {
        res.status(502).set("Retry-After", "5").json({ error: err.message });
        return;
      }
      throw err;
    }
  });

  return app;
}

function envDim(): number {
  const raw = process.env.EXEMVAD_SIDECAR_EMBED_DIM;
  return raw ? Number.parseInt(raw, 10) : 384;
}
