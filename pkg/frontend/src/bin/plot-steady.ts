#!/usr/bin/env node
import { main } from "../plotSteady.js";

process.exit(main(process.argv.slice(2)));
