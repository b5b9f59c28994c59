int a = 1;
int main() {
  int i, s;
  s = 0;
  for (i = 0; i < 3; i++) {
    s = s + i;
  }
  printf("%d\n", s + a);
  return 0;
}
