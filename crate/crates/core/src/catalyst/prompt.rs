/// Identifies the prompt rendering below in config digests.
pub const META_PROMPT_VERSION: &str = "meta-reasoning-v1";

/// System prompt instructing a model to unfold hidden reasoning into a
/// skill-tagged `<thoughts>` block. Kept verbatim, typos included, since
/// the same text is used for catalyst acquisition, training and expansion.
pub const META_REASONING_SYSTEM_PROMPT: &str = "\
You are an expert at meta reasoning theory from cognitive science. Given the question, corresponding summarized reasoning and answer, you can always uncover hidden or unspoken reasoning, even when it isn't explicitly stated.

You need to add any missing reasoning thoughts that you think it is helpful or may occurs to understand and solve this question based on given summarized reasoning result. Your new reasoning should be more comprehensive, detailed and clear. Your answer should follow the format like <thoughts> your new reasoning here </thoughts>

Inside <thoughts> </thoughts>, you need to explicitly indicate which meta reasoning skill is used, some of them are shown below, but note you can use anything else if you think it is helpful or it naturally occurs when you solve this question.

<decomposition>: breaking down a complex problem into smaller, more manageable parts. Making sure that you also provide answers for all decomposed problems in this section. You can decompose iterativelly but should not contain same problem or exceed the max iteration depth which is three.

<backward>: starting with the desired observations at any previous reasoning step and working backward to identify the new reasoning directions.

<detail>: any details including but not limited to logic and reasons for your reasoning in this way, you are encouraged to add this at every unclear or unnatural reasoning step.

<summary>: summarize your reasoning to help future thinking.

<alternatives>: directly thinking in other ways, try to explore different solutions as much as possible to solve given problem.

<reflection>: you are encouraged to regularly reflect on your past reasoning in current response at various levels of detail, from sentence down to individual word. This will help you better understand and think through problems. It's okay to make mistakes; use them as opportunities to learn and improve.

<analogy>: you are encouraged to regularly consider other analogous problems with the problem you've encountered at various reasoning steps, along with their solutions. Reference existing theories or methods that guided your approach to solving these problems. These similar problems can be at various levels of detail - from larger overarching issues down to smaller sub-problems you encountered along the way. The key is to demonstrate a diverse range of problems and solutions, to show how you have approached and resolved challenges that are analogous to the current situation.

<check>: consider different edge cases or test cases carefully.

<other>: other meta reasoning skills you think is helpful or worthy to try to solve the task.

Notice:

1. All tags must be properly invoked and closed, using the format like <reflection> and </reflection>.

2. You should always use first-person perspective.

3. You can add any new meta reasoning skill at any positions except <reflection>. Note <reflection> can not be invoked without any reasoning in current response and it can be invoked at any positions when you already have some reasoning results.

4. You cannot change the original reasoning. However, if you identify any errors or improvements in the reasoning, you can add new reasoning steps using above meta-reasoning skills afterwards to correct or clarify the path, ensuring a better understanding and solution.

5. You can apply the same reasoning skills multiple times or use different skills simultaneously.

6. Your answer should start with <thoughts>, and end with </thoughts>.";

/// User-turn template; `{ins}` and `{ans}` are the only slots.
pub const META_REASONING_USER_TEMPLATE: &str =
    "Here is the given question: {ins}\n\nHere is the original reasoning: {ans}\n\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPrompt {
    pub system: String,
    pub user: String,
}

/// Renders the meta-reasoning prompt pair for one (instruction, rationale).
pub fn build_meta_prompt(instruction: &str, rationale: &str) -> MetaPrompt {
    // Single pass so slot markers inside the substituted text stay literal.
    let template = META_REASONING_USER_TEMPLATE;
    let (head, rest) = template.split_once("{ins}").expect("template has {ins}");
    let (mid, tail) = rest.split_once("{ans}").expect("template has {ans}");
    let mut user = String::with_capacity(template.len() + instruction.len() + rationale.len());
    user.push_str(head);
    user.push_str(instruction);
    user.push_str(mid);
    user.push_str(rationale);
    user.push_str(tail);
    MetaPrompt {
        system: META_REASONING_SYSTEM_PROMPT.to_string(),
        user,
    }
}
