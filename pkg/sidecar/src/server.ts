/** Entry point: bind the app to EXEMVAD_SIDECAR_HOST/PORT (default 127.0.0.1:8094). */

import { createApp } from "./app.js";

const host = process.env.EXEMVAD_SIDECAR_HOST ?? "127.0.0.1";
const port = Number.parseInt(process.env.EXEMVAD_SIDECAR_PORT ?? "8094", 10);

const app = createApp();
app.listen(port, host, () => {
  console.log(`exemvad sidecar listening on http://${host}:${port}`);
});
