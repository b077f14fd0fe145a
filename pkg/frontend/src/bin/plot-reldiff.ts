#!/usr/bin/env node
import { main } from "../plotReldiff.js";

process.exit(main(process.argv.slice(2)));
