/** Browser entry point. */

import { boot } from "./app.js";

boot();
