import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
const base = (window as { FABHAL_API?: string }).FABHAL_API ?? "http://127.0.0.1:8765";
void new App(root, base).start();
