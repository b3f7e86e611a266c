import { defineConfig } from "vite";

// The dev server proxies API calls to a locally running miner service.
export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      "/v1": {
        target: "http://127.0.0.1:8080",
        changeOrigin: true,
      },
    },
  },
});
