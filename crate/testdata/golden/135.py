def clean(sentence):
    return sentence.strip()
