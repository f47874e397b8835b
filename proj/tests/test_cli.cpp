// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

#include "antispoof/text_util.hpp"
#include "doctest.h"
#include "test_util.hpp"

#ifndef ANTISPOOF_CLI
#error "ANTISPOOF_CLI must name the command-line binary"
#endif

namespace {

int run_cli(const std::string& args, const std::filesystem::path& out) {
  const std::string cmd = std::string(ANTISPOOF_CLI) + " " + args + " > '" + out.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

using antispoof::write_text_file;

TEST_CASE("cli exit codes") {
  antispoof::testing::TempDir dir;
  const auto out = dir / "out.txt";
  CHECK(run_cli("--help", out) == 0);
  CHECK(run_cli("", out) == 1);
  CHECK(run_cli("frobnicate", out) == 1);
  CHECK(run_cli("weer --r1 0.096", out) == 1);
  CHECK(run_cli("weer --r1 1.5 --r2 0.1", out) == 1);
  CHECK(run_cli("run --config " + (dir / "missing.ini").string(), out) == 1);

  write_text_file(dir / "unknown.ini", "[train]\nepochz = 1\n");
  CHECK(run_cli("run --config " + (dir / "unknown.ini").string(), out) == 1);
  CHECK(slurp(out).find("epochz") != std::string::npos);

  write_text_file(dir / "ok.ini", "[paths]\nwork_dir = w\n[system.a]\nfeature = stft1024\n");
  CHECK(run_cli("extract --config " + (dir / "ok.ini").string(), out) == 2);
  CHECK(slurp(out).find("missing dependency artifact") != std::string::npos);
  CHECK(run_cli("run --config " + (dir / "ok.ini").string() + " --stages fuse", out) == 1);

  CHECK(run_cli("eval --scores " + (dir / "none.tsv").string() + " --labels " + (dir / "none.tsv").string(), out) == 2);
}

TEST_CASE("cli score tools") {
  antispoof::testing::TempDir dir;
  const auto out = dir / "out.txt";
  CHECK(run_cli("weer --r1 0.096 --r2 0.120", out) == 0);
  CHECK(std::stod(slurp(out)) == doctest::Approx(0.1104).epsilon(1e-12));

  write_text_file(dir / "labels.tsv", "a\tbonafide\nb\tbonafide\nc\tspoof\nd\tspoof\ne\tbonafide\nf\tspoof\n");
  write_text_file(dir / "s1.tsv", "a\t0.9\nb\t0.8\nc\t0.2\nd\t0.1\ne\t0.3\nf\t0.6\n");
  write_text_file(dir / "s2.tsv", "a\t0.7\nb\t0.1\nc\t0.3\nd\t0.2\ne\t0.9\nf\t0.4\n");
  const std::string scores = " --scores " + (dir / "s1.tsv").string() + " --scores " + (dir / "s2.tsv").string();
  CHECK(run_cli("eval --labels " + (dir / "labels.tsv").string() + scores, out) == 0);
  CHECK(slurp(out).find("eer") != std::string::npos);

  const auto model = dir / "fusion.tsv";
  CHECK(run_cli("fuse-fit --labels " + (dir / "labels.tsv").string() + scores + " --name one --name two --out " +
                    model.string(),
                out) == 0);
  CHECK(slurp(model).rfind("bias\t", 0) == 0);
  CHECK(run_cli("fuse-apply --model " + model.string() + scores + " --out " + (dir / "fused.tsv").string(), out) == 0);
  CHECK(std::filesystem::exists(dir / "fused.tsv"));

  CHECK(run_cli("analyze --labels " + (dir / "labels.tsv").string() + scores + " --out-dir " +
                    (dir / "an").string(),
                out) == 0);
  CHECK(std::filesystem::exists(dir / "an" / "pair_system1__system2.csv"));
  CHECK(run_cli("analyze --labels " + (dir / "labels.tsv").string() + scores + " --name x --out-dir " +
                    (dir / "an").string(),
                out) == 1);

  write_text_file(dir / "flat.tsv", "a\t1\nb\t1\nc\t1\nd\t1\ne\t1\nf\t1\n");
  CHECK(run_cli("fuse-apply --model " + model.string() + " --scores " + (dir / "flat.tsv").string() + " --scores " +
                    (dir / "s2.tsv").string() + " --out " + (dir / "x.tsv").string(),
                out) == 2);
}
