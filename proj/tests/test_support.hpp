#pragma once

#include <string>

#include "misinfo/harness.hpp"
#include "misinfo/item.hpp"

// A small item with one truthful equation ($6 \times 7$) whose misinformation
// swaps the product for a sum. Built by hand so tests know exactly what the
// perturbed equation looks like.
inline misinfo::TestItem make_pens_item(const std::string& id = "pens-1") {
    using namespace misinfo;
    TestItem item;
    item.id = id;
    item.question = "Tom has 6 boxes with 7 pens in each box. How many pens does Tom have?";
    item.gold_answer = "42";
    item.source_dataset = "gsm8k";
    item.truthful_equations = {parse_equation("$\\text{total pens} = 6 \\times 7$")};

    PerturbationRecord rec;
    rec.kind = PerturbKind::OperatorAlt;
    rec.original = item.truthful_equations[0];
    rec.perturbed = parse_equation("$\\text{total pens} = 6 + 7$");
    rec.edit_lines = {"change the operator from \\times to + between 6 and 7"};
    rec.detail = OperatorAltDetail{BinaryOp::Mul, BinaryOp::Add, "6", "7"};
    rec.mutated_segment = 0;
    rec.mutated_side = 1;
    item.misinfo = rec;

    PerturbationRecord alt;
    alt.kind = PerturbKind::ValueMod;
    alt.original = item.truthful_equations[0];
    alt.perturbed = parse_equation("$\\text{total pens} = 6 \\times 9$");
    alt.edit_lines = {"change the value 7 to 9"};
    alt.detail = ValueModDetail{7, 9, "7", "9", false};
    alt.mutated_segment = 0;
    alt.mutated_side = 1;
    item.alt_misinfo = alt;
    return item;
}

inline misinfo::CoT make_cot(const std::vector<std::string>& steps) {
    misinfo::CoT cot;
    for (std::size_t i = 0; i < steps.size(); ++i)
        cot.steps.push_back({static_cast<int>(i + 1), steps[i]});
    if (!cot.steps.empty()) cot.final_answer_text = cot.steps.back().text;
    return cot;
}
