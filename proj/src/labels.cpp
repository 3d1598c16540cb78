#include "signseq/labels.hpp"

#include <array>
#include <charconv>

#include "signseq/errors.hpp"

namespace signseq {
namespace {

struct WordEntry {
    int number;
    std::string_view meaning;
};

constexpr std::array<WordEntry, kClassCount> kWords{{
    {1, "Father"},       {2, "Relative"},      {3, "Brother"},         {4, "Sister"},
    {5, "Wife"},         {6, "Paternal Uncle"}, {7, "Paternal Aunt"},  {8, "Grandfather"},
    {9, "Grandmother"},  {10, "Responsibility"}, {11, "Husband's Younger Brother"},
    {12, "Sister's Husband"}, {19, "Daughter"}, {20, "Mother"},        {37, "Mango"},
    {38, "Potato"},      {39, "Pineapple"},    {40, "Grapes"},         {41, "Apple"},
    {42, "Biscuits"},    {43, "Jujube"},       {44, "Cake"},           {45, "Tea"},
    {46, "Rice"},        {47, "Sugar"},        {48, "Chips"},          {49, "Chocolate"},
    {50, "Lentils"},     {91, "Button"},       {92, "Cap"},            {93, "Shawl"},
    {94, "Comb"},        {95, "Spectacles"},   {96, "Bangles"},        {97, "Clip"},
    {98, "Cream"},       {99, "Data"},         {100, "Indebted"},      {111, "Twin baby"},
    {112, "Shoe"},       {211, "Toothpaste"},  {212, "Tshirt"},        {213, "Tubelight"},
    {214, "Television"}, {215, "Air-conditioner"}, {216, "Apartment"}, {217, "Audio cassette"},
    {218, "Looking Mirror"}, {219, "Water Bucket"}, {220, "Sand"},     {351, "AIDS"},
    {352, "Arthritis"},  {353, "Bandage"},     {354, "Capsule"},       {355, "Treatment"},
    {356, "Conjunctivitis"}, {357, "Dengue"},  {358, "Doctor"},        {359, "Bite"},
    {360, "Weak"},
}};

void check_index(int class_index) {
    if (class_index < 0 || class_index >= kClassCount)
        throw LabelError("class index out of range: " + std::to_string(class_index));
}

}  // namespace

std::string word_label(int class_index) {
    check_index(class_index);
    return "W" + std::to_string(kWords[class_index].number);
}

int word_number(int class_index) {
    check_index(class_index);
    return kWords[class_index].number;
}

std::string_view word_meaning(int class_index) {
    check_index(class_index);
    return kWords[class_index].meaning;
}

int word_class(std::string_view label) {
    std::string_view digits = label;
    if (!digits.empty() && (digits.front() == 'W' || digits.front() == 'w')) digits.remove_prefix(1);
    int number = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), number);
    if (digits.empty() || ec != std::errc{} || end != digits.data() + digits.size())
        throw LabelError("malformed word label '" + std::string(label) + "'");
    for (int i = 0; i < kClassCount; ++i)
        if (kWords[i].number == number) return i;
    throw LabelError("unknown word label '" + std::string(label) + "'");
}

}  // namespace signseq
