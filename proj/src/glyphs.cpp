#include <array>

#include "alpr/errors.hpp"
#include "alpr/synthgen.hpp"

namespace alpr::synth {

namespace {

// 5x7 dot-matrix font, one glyph per class. Label order: digits 0-9 then
// A-Z without O. The zero glyph carries the interior slash so the shared
// O/0 class stays distinguishable from D and the ring symbol.
constexpr const char* kFont[35][7] = {
    // 0
    {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},
    // 1
    {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},
    // 2
    {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},
    // 3
    {".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."},
    // 4
    {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},
    // 5
    {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},
    // 6
    {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},
    // 7
    {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},
    // 8
    {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},
    // 9
    {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},
    // A
    {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},
    // B
    {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."},
    // C
    {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."},
    // D
    {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."},
    // E
    {"#####", "#....", "#....", "####.", "#....", "#....", "#####"},
    // F
    {"#####", "#....", "#....", "####.", "#....", "#....", "#...."},
    // G
    {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"},
    // H
    {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},
    // I
    {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."},
    // J
    {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."},
    // K
    {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"},
    // L
    {"#....", "#....", "#....", "#....", "#....", "#....", "#####"},
    // M
    {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"},
    // N
    {"#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"},
    // P
    {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."},
    // Q
    {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"},
    // R
    {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"},
    // S
    {".####", "#....", "#....", ".###.", "....#", "....#", "####."},
    // T
    {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."},
    // U
    {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."},
    // V
    {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."},
    // W
    {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"},
    // X
    {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"},
    // Y
    {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."},
    // Z
    {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"},
};

// Plate decorations that are not characters: wheelchair-like mark, flag,
// star, cross, ring.
constexpr const char* kSymbols[kSymbolCount][7] = {
    {"..#..", "..#..", ".##..", "..#.#", ".####", "#..#.", ".##.."},
    {"#....", "####.", "#####", "####.", "#....", "#....", "#...."},
    {".....", "#.#.#", ".###.", "#####", ".###.", "#.#.#", "....."},
    {".....", "..#..", "..#..", "#####", "..#..", "..#..", "....."},
    {".###.", "#####", "##.##", "##.##", "##.##", "#####", ".###."},
};

GlyphBitmap parse_glyph(const char* const rows[7]) {
  GlyphBitmap g;
  g.width = 5;
  g.height = 7;
  g.bits.resize(35);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 5; ++x) g.bits[size_t(y) * 5 + x] = rows[y][x] == '#';
  return g;
}

}  // namespace

const GlyphBitmap& glyph_for_class(int label) {
  if (label < 0 || label >= 35) throw InvalidArgument("glyph label out of range");
  static const std::array<GlyphBitmap, 35> glyphs = [] {
    std::array<GlyphBitmap, 35> out;
    for (int i = 0; i < 35; ++i) out[i] = parse_glyph(kFont[i]);
    return out;
  }();
  return glyphs[label];
}

const GlyphBitmap& symbol_bitmap(int index) {
  if (index < 0 || index >= kSymbolCount)
    throw InvalidArgument("symbol index out of range");
  static const std::array<GlyphBitmap, kSymbolCount> symbols = [] {
    std::array<GlyphBitmap, kSymbolCount> out;
    for (int i = 0; i < kSymbolCount; ++i) out[i] = parse_glyph(kSymbols[i]);
    return out;
  }();
  return symbols[index];
}

}  // namespace alpr::synth
