/*
 * Drives the nn2c CLI and the C compiler. The harness talks to the
 * Python package only through its command line and file formats.
 */
import { spawnSync } from "node:child_process";
import { readFileSync } from "node:fs";
import * as path from "node:path";

export const STRICT_C_FLAGS = [
  "-std=c99",
  "-pedantic",
  "-Wall",
  "-Wextra",
  "-Werror",
  "-O2",
] as const;

const HARNESS_C = path.join(path.dirname(new URL(import.meta.url).pathname), "..", "harness.c");

export interface RunResult {
  status: number;
  stdout: string;
  stderr: string;
}

function run(command: string, args: string[]): RunResult {
  const res = spawnSync(command, args, { encoding: "utf-8" });
  if (res.error) {
    throw res.error;
  }
  return { status: res.status ?? -1, stdout: res.stdout, stderr: res.stderr };
}

export function nn2c(args: string[]): RunResult {
  return run("python3", ["-m", "nn2c", ...args]);
}

function expectZero(what: string, res: RunResult): void {
  if (res.status !== 0) {
    throw new Error(`${what} exited ${res.status}: ${res.stderr}`);
  }
}

/** Emit model sources into genDir; returns the compile report paths. */
export function compileModel(model: string, genDir: string): { plan: string; sources: string[] } {
  expectZero(`nn2c compile ${model}`, nn2c(["compile", model, "-o", genDir, "--quiet"]));
  return {
    plan: path.join(genDir, `${model}_plan.json`),
    sources: [
      path.join(genDir, `${model}_model.h`),
      path.join(genDir, `${model}_model.c`),
      path.join(genDir, `${model}_weights.c`),
    ],
  };
}

export function generateVectors(model: string, outPath: string, count: number, seed = 42): void {
  expectZero(
    `nn2c vectors ${model}`,
    nn2c(["vectors", model, "-o", outPath, "--count", String(count), "--seed", String(seed), "--quiet"]),
  );
}

/** Build harness.c + the generated sources into one executable. */
export function buildRunner(model: string, genDir: string, exePath: string): void {
  const upper = model.toUpperCase();
  const res = run("gcc", [
    ...STRICT_C_FLAGS,
    `-DMODEL_HEADER="${model}_model.h"`,
    `-DMODEL_INIT=${model}_init`,
    `-DMODEL_RUN=${model}_run`,
    `-DMODEL_IN_SIZE=${upper}_IN_SIZE`,
    `-DMODEL_OUT_SIZE=${upper}_OUT_SIZE`,
    "-I",
    genDir,
    HARNESS_C,
    path.join(genDir, `${model}_model.c`),
    path.join(genDir, `${model}_weights.c`),
    "-lm",
    "-o",
    exePath,
  ]);
  if (res.status !== 0) {
    throw new Error(`gcc exited ${res.status}:\n${res.stderr}`);
  }
}

export function runRunner(
  exePath: string,
  inPath: string,
  outPath: string,
  repeat?: number,
): RunResult {
  const args = [inPath, outPath];
  if (repeat !== undefined) {
    args.push(String(repeat));
  }
  return run(exePath, args);
}

export function readPlan(planPath: string): { arena_bytes: number; flash_bytes: number } {
  return JSON.parse(readFileSync(planPath, "utf-8"));
}
