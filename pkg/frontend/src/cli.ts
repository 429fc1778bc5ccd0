import { main } from "./plot.js";

process.exit(main(process.argv.slice(2)));
