#include "psguard/ast.hpp"

#include "psguard/lexer.hpp"

namespace psguard {

namespace {

void dump_node(const AstNode& node, int depth, std::string& out) {
    for (int i = 0; i < depth; ++i) out += "|   ";
    out += to_string(node.kind);
    if (node.kind != AstKind::ScriptRoot) {
        out += ": ";
        bool in_space = false;
        for (char c : sanitize_utf8(node.text)) {
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
                in_space = true;
                continue;
            }
            if (in_space) out += ' ';
            in_space = false;
            out += c;
        }
    }
    out += '\n';
    for (const auto& child : node.children) dump_node(child, depth + 1, out);
}

}  // namespace

std::string_view to_string(AstKind kind) {
    switch (kind) {
    case AstKind::ScriptRoot: return "ScriptRoot";
    case AstKind::PipelineAst: return "PipelineAst";
    case AstKind::CommandAst: return "CommandAst";
    case AstKind::CmdletAst: return "CmdletAst";
    case AstKind::CommandParameterAst: return "CommandParameterAst";
    case AstKind::ArgumentAst: return "ArgumentAst";
    case AstKind::CommandExpressionAst: return "CommandExpressionAst";
    case AstKind::ExpressionAst: return "ExpressionAst";
    case AstKind::MethodInvocationAst: return "MethodInvocationAst";
    case AstKind::MethodNameAst: return "MethodNameAst";
    case AstKind::TypeNameAst: return "TypeNameAst";
    case AstKind::StringLiteralAst: return "StringLiteralAst";
    case AstKind::VariableAst: return "VariableAst";
    case AstKind::AssignmentAst: return "AssignmentAst";
    case AstKind::ScriptBlockAst: return "ScriptBlockAst";
    case AstKind::IfAst: return "IfAst";
    case AstKind::LoopAst: return "LoopAst";
    case AstKind::FunctionDefinitionAst: return "FunctionDefinitionAst";
    case AstKind::OperatorAst: return "OperatorAst";
    case AstKind::ErrorAst: return "ErrorAst";
    }
    return "ErrorAst";
}

std::optional<AstKind> ast_kind_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kAstKindCount; ++i) {
        const auto kind = static_cast<AstKind>(i);
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

std::size_t AstNode::node_count() const {
    std::size_t n = 1;
    for (const auto& child : children) n += child.node_count();
    return n;
}

std::string dump_ast(const AstNode& root) {
    std::string out;
    dump_node(root, 0, out);
    return out;
}

std::vector<AstKind> kind_sequence(const AstNode& root) {
    std::vector<AstKind> out;
    std::vector<const AstNode*> stack{&root};
    while (!stack.empty()) {
        const AstNode* node = stack.back();
        stack.pop_back();
        out.push_back(node->kind);
        for (auto it = node->children.rbegin(); it != node->children.rend(); ++it) stack.push_back(&*it);
    }
    return out;
}

}  // namespace psguard
