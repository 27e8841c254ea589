#include "faultcast/corpus.hpp"

#include <cinttypes>
#include <cstdarg>
#include <cstdio>

#include "faultcast/error.hpp"
#include "faultcast/rng.hpp"
#include "faultcast/text.hpp"

namespace faultcast::corpus {
namespace {

const char* const kFamilyNames[kFamilyCount] = {
    "float_reduce", "int_chain", "stencil", "branchy", "shifty", "convert_mix",
};

struct Builder {
  std::string out;

  void line(const std::string& s) {
    out += s;
    out += '\n';
  }
  void linef(const char* fmt, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    line(buf);
  }
};

// Inclusive integer knob.
int64_t knob(SplitMix64& rng, int64_t lo, int64_t hi) {
  return lo + static_cast<int64_t>(rng.below(static_cast<uint64_t>(hi - lo + 1)));
}

std::string flit(double v) { return fmt_f64_literal(v); }

// Counter suffix keeps register names unique when a family emits a
// variable number of temporaries.
std::string reg(const char* base, int k) { return std::string("%") + base + std::to_string(k); }

// Shared epilogue: compare-and-branch back to the loop header.
void loop_tail(Builder& b, const char* ivar, const char* bound, const char* header,
               const char* exit, int uniq) {
  b.linef("  %%i%d = add %s, 1", uniq, ivar);
  b.linef("  %s = add %%i%d, 0", ivar, uniq);
  b.linef("  %%c%d = icmp %s, %s", uniq, ivar, bound);
  b.linef("  br_cond %%c%d, $%s, $%s", uniq, header, exit);
}

GeneratedKernel gen_float_reduce(SplitMix64& rng, const std::string& id) {
  int trips = static_cast<int>(knob(rng, 8, 48));
  int accs = static_cast<int>(knob(rng, 1, 2));
  int dead = static_cast<int>(knob(rng, 0, 2));
  bool with_div = knob(rng, 0, 1) == 1;
  int spill = static_cast<int>(knob(rng, 1, 40)) * 8;
  int reloads = static_cast<int>(knob(rng, 1, 2));
  double x = 0.25 + 1.75 * rng.unit();
  double lits[2] = {0.5 + rng.unit(), 0.5 + rng.unit()};
  double dead_lits[2] = {1.0 + rng.unit(), 1.0 + rng.unit()};

  Builder b;
  b.line(".input n i32");
  b.line(".input x f64");
  b.line(".output out f64");
  b.line(".loop loop");
  b.line("entry:");
  b.line("  %i = add 0, 0");
  for (int k = 0; k < accs; ++k) b.linef("  %s = fadd 0.0, 0.0", reg("acc", k).c_str());
  b.line("  br $loop");
  b.line("loop:");
  b.line("  %t = zext %i");
  for (int k = 0; k < accs; ++k) {
    b.linef("  %s = fmul %%t, %s", reg("v", k).c_str(), flit(lits[k]).c_str());
    b.linef("  %s = fmul %s, %%x", reg("w", k).c_str(), reg("v", k).c_str());
    b.linef("  %s = fadd %s, %s", reg("acc", k).c_str(), reg("acc", k).c_str(),
            reg("w", k).c_str());
  }
  for (int k = 0; k < dead; ++k)
    b.linef("  %s = fmul %%v0, %s", reg("dt", k).c_str(), flit(dead_lits[k]).c_str());
  for (int k = 0; k < reloads; ++k) {
    b.linef("  store %%acc0, @%d", spill + 8 * k);
    b.linef("  %%acc0 = load @%d", spill + 8 * k);
  }
  if (with_div) {
    b.linef("  %%q = fadd %%acc0, %s", flit(2.0 + rng.unit()).c_str());
    b.line("  %dq = fdiv %acc0, %q");
  }
  loop_tail(b, "%i", "%n", "loop", "done", 0);
  b.line("done:");
  if (accs == 2)
    b.line("  %out = fadd %acc0, %acc1");
  else
    b.line("  %out = fadd %acc0, 0.0");
  if (with_div) b.line("  %out = fadd %out, %dq");
  b.line("  output %out");
  b.line("  halt");

  std::string in;
  in += "n = " + std::to_string(trips) + "\n";
  in += "x = " + flit(x) + "\n";
  return {id, b.out, in};
}

GeneratedKernel gen_int_chain(SplitMix64& rng, const std::string& id) {
  int trips = static_cast<int>(knob(rng, 8, 40));
  int ops = static_cast<int>(knob(rng, 2, 5));
  int dead = static_cast<int>(knob(rng, 0, 2));
  bool with_div = knob(rng, 0, 1) == 1;
  int spill = static_cast<int>(knob(rng, 1, 7)) * 8;
  int64_t a = knob(rng, 3, 1000);
  int64_t step_lits[5];
  for (auto& l : step_lits) l = knob(rng, 1, 255);

  Builder b;
  b.line(".input n i32");
  b.line(".input a i32");
  b.line(".output out i32");
  b.line(".loop loop");
  b.line("entry:");
  b.line("  %i = add 0, 0");
  b.line("  %acc = add %a, 0");
  b.linef("  store %%acc, @%d", spill);
  b.line("  br $loop");
  b.line("loop:");
  b.linef("  %%acc = load @%d", spill);
  static const char* const kOps[3] = {"mul", "add", "xor"};
  std::string prev = "%acc";
  for (int k = 0; k < ops; ++k) {
    std::string dst = reg("t", k);
    b.linef("  %s = %s %s, %" PRId64, dst.c_str(), kOps[k % 3], prev.c_str(), step_lits[k]);
    prev = dst;
  }
  b.linef("  store %s, @%d", prev.c_str(), spill + 8);
  b.linef("  %%m = load @%d", spill + 8);
  prev = "%m";
  if (with_div) {
    b.line("  %d = add %i, 1");
    b.linef("  %%q = sdiv %s, %%d", prev.c_str());
    b.linef("  %%r = srem %s, 97", prev.c_str());
    b.line("  %q = add %q, %r");
    prev = "%q";
  }
  for (int k = 0; k < dead; ++k) b.linef("  %s = mul %s, 3", reg("dt", k).c_str(), prev.c_str());
  b.linef("  %%acc = add %s, %%i", prev.c_str());
  b.linef("  store %%acc, @%d", spill);
  loop_tail(b, "%i", "%n", "loop", "done", 0);
  b.line("done:");
  b.linef("  %%out = load @%d", spill);
  b.line("  output %out");
  b.line("  halt");

  std::string in;
  in += "n = " + std::to_string(trips) + "\n";
  in += "a = " + std::to_string(a) + "\n";
  return {id, b.out, in};
}

GeneratedKernel gen_stencil(SplitMix64& rng, const std::string& id) {
  int trips = static_cast<int>(knob(rng, 6, 24));
  int base = static_cast<int>(knob(rng, 2, 64)) * 16;
  int64_t c1 = knob(rng, 2, 31);
  int64_t c2 = knob(rng, 0, 255);
  bool second_tap = knob(rng, 0, 1) == 1;

  Builder b;
  b.line(".input n i32");
  b.line(".output out i32");
  b.line(".loop fill");
  b.line(".loop gather");
  b.line("entry:");
  b.line("  %i = add 0, 0");
  b.line("  br $fill");
  b.line("fill:");
  b.linef("  %%p = getelementptr @%d, %%i", base);
  b.linef("  %%v = mul %%i, %" PRId64, c1);
  b.linef("  %%v = add %%v, %" PRId64, c2);
  b.line("  store %v, %p");
  loop_tail(b, "%i", "%n", "fill", "mid", 0);
  b.line("mid:");
  b.line("  %j = add 1, 0");
  b.line("  %acc = add 0, 0");
  b.line("  br $gather");
  b.line("gather:");
  b.linef("  %%pa = getelementptr @%d, %%j", base);
  b.line("  %va = load %pa");
  b.line("  %pb = getelementptr %pa, -1");
  b.line("  %vb = load %pb");
  b.line("  %s = add %va, %vb");
  if (second_tap) {
    b.line("  %s = sub %s, %j");
  }
  b.line("  %acc = add %acc, %s");
  loop_tail(b, "%j", "%n", "gather", "done", 1);
  b.line("done:");
  b.line("  %out = add %acc, 0");
  b.line("  output %out");
  b.line("  halt");

  std::string in = "n = " + std::to_string(trips) + "\n";
  return {id, b.out, in};
}

GeneratedKernel gen_branchy(SplitMix64& rng, const std::string& id) {
  int trips = static_cast<int>(knob(rng, 8, 40));
  int64_t x = knob(rng, 11, 4000);
  int64_t mod = knob(rng, 3, 7);
  int64_t cut = knob(rng, 1, mod - 1);
  int64_t add_lit = knob(rng, 1, 63);
  int64_t xor_lit = knob(rng, 1, 255);
  bool fold_select = knob(rng, 0, 1) == 1;
  int spill = static_cast<int>(knob(rng, 1, 60)) * 4;

  Builder b;
  b.line(".input n i32");
  b.line(".input x i32");
  b.line(".output out i32");
  b.line(".loop loop");
  b.line("entry:");
  b.line("  %i = add 0, 0");
  b.line("  %acc = add 0, 0");
  b.line("  br $loop");
  b.line("loop:");
  b.line("  %xm = add %x, %i");
  b.linef("  %%m = srem %%xm, %" PRId64, mod);
  b.linef("  %%c = icmp %%m, %" PRId64, cut);
  b.line("  br_cond %c, $then, $else");
  b.line("then:");
  b.linef("  %%acc = add %%acc, %" PRId64, add_lit);
  b.line("  %tv = shl %acc, 1");
  b.line("  br $tail");
  b.line("else:");
  b.linef("  %%acc = xor %%acc, %" PRId64, xor_lit);
  b.line("  %tv = lshr %acc, 1");
  b.line("  br $tail");
  b.line("tail:");
  b.line("  %sel = select %c, %tv, %xm");
  if (fold_select) b.line("  %acc = add %acc, %sel");
  b.linef("  store %%acc, @%d", spill);
  b.linef("  %%acc = load @%d", spill);
  loop_tail(b, "%i", "%n", "loop", "done", 0);
  b.line("done:");
  b.line("  %out = add %acc, 0");
  b.line("  output %out");
  b.line("  halt");

  std::string in;
  in += "n = " + std::to_string(trips) + "\n";
  in += "x = " + std::to_string(x) + "\n";
  return {id, b.out, in};
}

GeneratedKernel gen_shifty(SplitMix64& rng, const std::string& id) {
  int trips = static_cast<int>(knob(rng, 8, 40));
  int64_t x = knob(rng, 1, 100000);
  int64_t shmask = knob(rng, 3, 15);
  int64_t right = knob(rng, 1, 3);
  int64_t mask = (1LL << knob(rng, 8, 20)) - 1;
  bool with_ashr = knob(rng, 0, 1) == 1;
  int spill = static_cast<int>(knob(rng, 1, 50)) * 4;

  Builder b;
  b.line(".input n i32");
  b.line(".input x i32");
  b.line(".output out i32");
  b.line(".loop loop");
  b.line("entry:");
  b.line("  %i = add 0, 0");
  b.line("  %acc = add %x, 0");
  b.line("  br $loop");
  b.line("loop:");
  b.linef("  %%sh = and %%i, %" PRId64, shmask);
  b.line("  %v = shl %x, %sh");
  b.linef("  %%w = lshr %%v, %" PRId64, right);
  if (with_ashr) b.line("  %w = ashr %w, 1");
  b.line("  %acc = xor %acc, %w");
  b.linef("  %%acc = and %%acc, %" PRId64, mask);
  b.line("  %acc = or %acc, 1");
  b.linef("  store %%acc, @%d", spill);
  b.linef("  %%acc = load @%d", spill);
  loop_tail(b, "%i", "%n", "loop", "done", 0);
  b.line("done:");
  b.line("  %out = add %acc, 0");
  b.line("  output %out");
  b.line("  halt");

  std::string in;
  in += "n = " + std::to_string(trips) + "\n";
  in += "x = " + std::to_string(x) + "\n";
  return {id, b.out, in};
}

GeneratedKernel gen_convert_mix(SplitMix64& rng, const std::string& id) {
  int trips = static_cast<int>(knob(rng, 8, 32));
  double x = 0.5 + 3.5 * rng.unit();
  double scale = 0.75 + rng.unit();
  int64_t mask = (1LL << knob(rng, 10, 24)) - 1;
  bool with_bitcast = knob(rng, 0, 1) == 1;
  int spill = static_cast<int>(knob(rng, 1, 30)) * 8;

  Builder b;
  b.line(".input n i32");
  b.line(".input x f64");
  b.line(".output outf f64");
  b.line(".output outi i32");
  b.line(".loop loop");
  b.line("entry:");
  b.line("  %i = add 0, 0");
  b.line("  %acc = add 0, 0");
  b.line("  %facc = fadd 0.0, 0.0");
  b.line("  br $loop");
  b.line("loop:");
  b.line("  %f = sext %i");
  b.linef("  %%g = fmul %%f, %s", flit(scale).c_str());
  b.line("  %h = fadd %g, %x");
  b.line("  %ft = fptrunc %h");
  b.line("  %j = trunc %ft");
  b.linef("  %%k = and %%j, %" PRId64, mask);
  b.line("  %acc = add %acc, %k");
  b.line("  %fe = fpext %ft");
  b.line("  %facc = fadd %facc, %fe");
  if (with_bitcast) {
    b.line("  %bp = bitcast %k");
    b.line("  %bk = bitcast %bp");
    b.line("  %acc = xor %acc, %bk");
  }
  b.linef("  store %%facc, @%d", spill);
  b.linef("  %%facc = load @%d", spill);
  loop_tail(b, "%i", "%n", "loop", "done", 0);
  b.line("done:");
  b.line("  %outf = fadd %facc, 0.0");
  b.line("  output %outf");
  b.line("  %outi = add %acc, 0");
  b.line("  output %outi");
  b.line("  halt");

  std::string in;
  in += "n = " + std::to_string(trips) + "\n";
  in += "x = " + flit(x) + "\n";
  return {id, b.out, in};
}

}  // namespace

const char* family_name(int family) {
  if (family < 0 || family >= kFamilyCount) throw UsageError("family index out of range");
  return kFamilyNames[family];
}

GeneratedKernel generate_kernel(uint64_t seed, uint64_t index) {
  int family = static_cast<int>(index % kFamilyCount);
  SplitMix64 rng = SplitMix64::derive(seed, index);
  char idbuf[64];
  std::snprintf(idbuf, sizeof idbuf, "%s_%03" PRIu64, kFamilyNames[family], index);
  std::string id = idbuf;
  switch (family) {
    case 0: return gen_float_reduce(rng, id);
    case 1: return gen_int_chain(rng, id);
    case 2: return gen_stencil(rng, id);
    case 3: return gen_branchy(rng, id);
    case 4: return gen_shifty(rng, id);
    default: return gen_convert_mix(rng, id);
  }
}

std::vector<GeneratedKernel> generate_corpus(uint64_t seed, uint64_t count, uint64_t first_index) {
  std::vector<GeneratedKernel> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) out.push_back(generate_kernel(seed, first_index + i));
  return out;
}

std::string corpus_manifest(const std::vector<GeneratedKernel>& kernels, uint64_t campaign_n,
                            double tolerance, uint64_t seed) {
  std::string out = "# generated kernel corpus\n";
  for (size_t i = 0; i < kernels.size(); ++i) {
    const auto& k = kernels[i];
    out += "entry id=" + k.id + " program=programs/" + k.id + ".ir inputs=inputs/" + k.id +
           ".in tolerance=" + fmt_g9(tolerance) + " n=" + std::to_string(campaign_n) +
           " seed=" + std::to_string(SplitMix64::derive(seed, i).next()) + "\n";
  }
  return out;
}

}  // namespace faultcast::corpus
