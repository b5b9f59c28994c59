int a;
short int b = 1;
int main() {
  int *c = &b;
  if (*c) {
    *c = 1;
  }
  printf("%d\n", b);
  return 0;
}
